#include "laxflow/rational.hpp"

#include <algorithm>
#include <cmath>

namespace laxflow {

namespace {
constexpr double kPoleMatchTol = 1e-12;

bool pole_before(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

bool pole_same(cplx a, cplx b) { return std::abs(a - b) <= kPoleMatchTol; }
}  // namespace

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

RationalMatrixFunction::RationalMatrixFunction(int dim) : dim_(dim) {
  require(dim > 0, ErrorCode::InvalidArgument, "rational function dimension must be positive");
}

RationalMatrixFunction RationalMatrixFunction::constant(const Mat& value) {
  require(value.rows() == value.cols(), ErrorCode::InvalidArgument,
          "rational function must be square");
  RationalMatrixFunction f(static_cast<int>(value.rows()));
  f.set_poly_coeff(0, value);
  return f;
}

int RationalMatrixFunction::poly_degree() const { return static_cast<int>(poly_.size()) - 1; }

Mat RationalMatrixFunction::poly_coeff(int k) const {
  require(k >= 0, ErrorCode::InvalidArgument, "negative polynomial degree");
  if (k >= static_cast<int>(poly_.size())) return Mat::Zero(dim_, dim_);
  return poly_[static_cast<size_t>(k)];
}

void RationalMatrixFunction::set_poly_coeff(int k, const Mat& v) {
  require(k >= 0, ErrorCode::InvalidArgument, "negative polynomial degree");
  require(v.rows() == dim_ && v.cols() == dim_, ErrorCode::InvalidArgument,
          "coefficient dimension mismatch");
  while (static_cast<int>(poly_.size()) <= k) poly_.push_back(Mat::Zero(dim_, dim_));
  poly_[static_cast<size_t>(k)] = v;
}

void RationalMatrixFunction::add_poly_coeff(int k, const Mat& v) {
  set_poly_coeff(k, poly_coeff(k) + v);
}

int RationalMatrixFunction::pole_order_at(const SpherePoint& p) const {
  if (p.at_inf) return std::max(poly_degree(), 0);
  const PolePart* pp = find_pole(p.z);
  return pp ? pp->order() : 0;
}

Mat RationalMatrixFunction::pole_coeff(cplx location, int j) const {
  require(j >= 1, ErrorCode::InvalidArgument, "principal part index must be >= 1");
  const PolePart* pp = find_pole(location);
  if (!pp || j > pp->order()) return Mat::Zero(dim_, dim_);
  return pp->coeff[static_cast<size_t>(j - 1)];
}

void RationalMatrixFunction::add_pole_coeff(cplx location, int j, const Mat& v) {
  require(j >= 1, ErrorCode::InvalidArgument, "principal part index must be >= 1");
  require(v.rows() == dim_ && v.cols() == dim_, ErrorCode::InvalidArgument,
          "coefficient dimension mismatch");
  PolePart& pp = find_or_add_pole(location);
  while (pp.order() < j) pp.coeff.push_back(Mat::Zero(dim_, dim_));
  pp.coeff[static_cast<size_t>(j - 1)] += v;
}

PolePart& RationalMatrixFunction::find_or_add_pole(cplx location) {
  for (auto& pp : poles_)
    if (pole_same(pp.location, location)) return pp;
  PolePart fresh;
  fresh.location = location;
  auto it = std::upper_bound(poles_.begin(), poles_.end(), fresh,
                             [](const PolePart& a, const PolePart& b) {
                               return pole_before(a.location, b.location);
                             });
  return *poles_.insert(it, std::move(fresh));
}

const PolePart* RationalMatrixFunction::find_pole(cplx location) const {
  for (const auto& pp : poles_)
    if (pole_same(pp.location, location)) return &pp;
  return nullptr;
}

void RationalMatrixFunction::check_compatible(const RationalMatrixFunction& o) const {
  require(dim_ == o.dim_, ErrorCode::InvalidArgument, "rational function dimension mismatch");
}

Mat RationalMatrixFunction::evaluate(cplx z) const {
  Mat acc = Mat::Zero(dim_, dim_);
  for (int k = static_cast<int>(poly_.size()) - 1; k >= 0; --k)
    acc = acc * z + poly_[static_cast<size_t>(k)];
  for (const auto& pp : poles_) {
    cplx d = z - pp.location;
    require(std::abs(d) > kPoleMatchTol, ErrorCode::NotInvertibleAtPoint,
            "evaluation at a pole");
    cplx dj(1, 0);
    for (int j = 1; j <= pp.order(); ++j) {
      dj /= d;
      acc += pp.coeff[static_cast<size_t>(j - 1)] * dj;
    }
  }
  return acc;
}

MatrixLaurentSeries RationalMatrixFunction::expand_at(const SpherePoint& p, int trunc_order) const {
  require(dim_ > 0, ErrorCode::InvalidArgument, "expansion of an uninitialized function");
  if (p.at_inf) {
    int min_order = -std::max(poly_degree(), 0);
    MatrixLaurentSeries s(p, dim_, min_order, trunc_order);
    for (int k = 0; k < static_cast<int>(poly_.size()); ++k)
      if (-k < trunc_order) s.add_to_coeff(-k, poly_[static_cast<size_t>(k)]);
    // (z-q)^{-j} = w^j (1-qw)^{-j} = sum_m binom(j+m-1,m) q^m w^{j+m}
    for (const auto& pp : poles_) {
      for (int j = 1; j <= pp.order(); ++j) {
        const Mat& c = pp.coeff[static_cast<size_t>(j - 1)];
        cplx qm(1, 0);
        for (int m = 0; j + m < trunc_order; ++m) {
          s.add_to_coeff(j + m, c * (binom(j + m - 1, m) * qm));
          qm *= pp.location;
        }
      }
    }
    return s;
  }

  int ord = pole_order_at(p);
  MatrixLaurentSeries s(p, dim_, -ord, trunc_order);
  // Polynomial part: z^k = (p + w)^k.
  for (int k = 0; k < static_cast<int>(poly_.size()); ++k) {
    const Mat& c = poly_[static_cast<size_t>(k)];
    for (int j = 0; j <= k && j < trunc_order; ++j)
      s.add_to_coeff(j, c * (binom(k, j) * ipow(p.z, k - j)));
  }
  for (const auto& pp : poles_) {
    if (pole_same(pp.location, p.z)) {
      for (int j = 1; j <= pp.order(); ++j)
        if (-j < trunc_order) s.add_to_coeff(-j, pp.coeff[static_cast<size_t>(j - 1)]);
      continue;
    }
    // (z-q)^{-j} = sum_m (-1)^m binom(j+m-1,m) (p-q)^{-j-m} w^m
    cplx base = p.z - pp.location;
    for (int j = 1; j <= pp.order(); ++j) {
      const Mat& c = pp.coeff[static_cast<size_t>(j - 1)];
      cplx pw = ipow(base, -j);
      double sign = 1.0;
      for (int m = 0; m < trunc_order; ++m) {
        s.add_to_coeff(m, c * (sign * binom(j + m - 1, m) * pw));
        pw /= base;
        sign = -sign;
      }
    }
  }
  return s;
}

Mat RationalMatrixFunction::residue_dz_at(const SpherePoint& p) const {
  if (!p.at_inf) return pole_coeff(p.z, 1);
  // dz = -w^{-2} dw, so the residue picks out minus the w^1 coefficient.
  return -expand_at(p, 2).coeff(1);
}

RationalMatrixFunction& RationalMatrixFunction::operator+=(const RationalMatrixFunction& o) {
  check_compatible(o);
  for (const auto& pp : o.poles_)
    for (int j = 1; j <= pp.order(); ++j)
      add_pole_coeff(pp.location, j, pp.coeff[static_cast<size_t>(j - 1)]);
  for (int k = 0; k < static_cast<int>(o.poly_.size()); ++k)
    add_poly_coeff(k, o.poly_[static_cast<size_t>(k)]);
  return *this;
}

RationalMatrixFunction& RationalMatrixFunction::operator-=(const RationalMatrixFunction& o) {
  return *this += o * cplx(-1, 0);
}

RationalMatrixFunction operator*(const RationalMatrixFunction& a, const RationalMatrixFunction& b) {
  a.check_compatible(b);
  RationalMatrixFunction out(a.dim_);

  std::vector<cplx> locations;
  for (const auto& pp : a.poles_) locations.push_back(pp.location);
  for (const auto& pp : b.poles_) {
    bool seen = false;
    for (const auto& q : locations) seen = seen || pole_same(q, pp.location);
    if (!seen) locations.push_back(pp.location);
  }
  std::sort(locations.begin(), locations.end(), pole_before);

  for (const auto& q : locations) {
    SpherePoint p = SpherePoint::finite(q);
    int oa = a.pole_order_at(p);
    int ob = b.pole_order_at(p);
    MatrixLaurentSeries prod = a.expand_at(p, ob + 2) * b.expand_at(p, oa + 2);
    for (int j = 1; j <= oa + ob; ++j) {
      Mat c = prod.coeff(-j);
      if (max_abs(c) > 0.0) out.add_pole_coeff(q, j, c);
    }
  }

  int da = std::max(a.poly_degree(), 0);
  int db = std::max(b.poly_degree(), 0);
  SpherePoint inf = SpherePoint::infinity();
  MatrixLaurentSeries prod_inf = a.expand_at(inf, db + 2) * b.expand_at(inf, da + 2);
  for (int k = 0; k <= da + db; ++k) {
    Mat c = prod_inf.coeff(-k);
    if (max_abs(c) > 0.0 || k == 0) out.add_poly_coeff(k, c);
  }
  return out;
}

RationalMatrixFunction RationalMatrixFunction::operator*(cplx s) const {
  RationalMatrixFunction out = *this;
  for (auto& pp : out.poles_)
    for (auto& c : pp.coeff) c *= s;
  for (auto& c : out.poly_) c *= s;
  return out;
}

RationalMatrixFunction RationalMatrixFunction::left_mul(const Mat& a) const {
  RationalMatrixFunction out = *this;
  for (auto& pp : out.poles_)
    for (auto& c : pp.coeff) c = a * c;
  for (auto& c : out.poly_) c = a * c;
  return out;
}

RationalMatrixFunction RationalMatrixFunction::right_mul(const Mat& a) const {
  RationalMatrixFunction out = *this;
  for (auto& pp : out.poles_)
    for (auto& c : pp.coeff) c = c * a;
  for (auto& c : out.poly_) c = c * a;
  return out;
}

RationalMatrixFunction RationalMatrixFunction::transpose() const {
  RationalMatrixFunction out = *this;
  for (auto& pp : out.poles_)
    for (auto& c : pp.coeff) c = c.transpose().eval();
  for (auto& c : out.poly_) c = c.transpose().eval();
  return out;
}

RationalMatrixFunction RationalMatrixFunction::trace() const {
  RationalMatrixFunction out(1);
  for (const auto& pp : poles_)
    for (int j = 1; j <= pp.order(); ++j) {
      Mat c(1, 1);
      c(0, 0) = pp.coeff[static_cast<size_t>(j - 1)].trace();
      out.add_pole_coeff(pp.location, j, c);
    }
  for (int k = 0; k < static_cast<int>(poly_.size()); ++k) {
    Mat c(1, 1);
    c(0, 0) = poly_[static_cast<size_t>(k)].trace();
    out.add_poly_coeff(k, c);
  }
  return out;
}

RationalMatrixFunction RationalMatrixFunction::derivative() const {
  RationalMatrixFunction out(dim_);
  out.set_poly_coeff(0, Mat::Zero(dim_, dim_));
  for (const auto& pp : poles_)
    for (int j = 1; j <= pp.order(); ++j)
      out.add_pole_coeff(pp.location, j + 1,
                         pp.coeff[static_cast<size_t>(j - 1)] * cplx(-static_cast<double>(j), 0));
  for (int k = 1; k < static_cast<int>(poly_.size()); ++k)
    out.add_poly_coeff(k - 1, poly_[static_cast<size_t>(k)] * cplx(static_cast<double>(k), 0));
  return out;
}

RationalMatrixFunction RationalMatrixFunction::pow(int exponent) const {
  require(exponent >= 0, ErrorCode::InvalidArgument, "negative function power");
  RationalMatrixFunction out = RationalMatrixFunction::constant(Mat::Identity(dim_, dim_));
  for (int i = 0; i < exponent; ++i) out = out * (*this);
  return out;
}

RationalMatrixFunction RationalMatrixFunction::trimmed(double rel_eps) const {
  double scale = max_abs_coeff();
  double cut = rel_eps * scale;
  RationalMatrixFunction out(dim_);
  for (const auto& pp : poles_) {
    int top = pp.order();
    while (top >= 1 && max_abs(pp.coeff[static_cast<size_t>(top - 1)]) <= cut) --top;
    for (int j = 1; j <= top; ++j)
      out.add_pole_coeff(pp.location, j, pp.coeff[static_cast<size_t>(j - 1)]);
  }
  int dtop = static_cast<int>(poly_.size()) - 1;
  while (dtop >= 1 && max_abs(poly_[static_cast<size_t>(dtop)]) <= cut) --dtop;
  for (int k = 0; k <= dtop && k < static_cast<int>(poly_.size()); ++k)
    out.add_poly_coeff(k, poly_[static_cast<size_t>(k)]);
  if (out.poly_.empty()) out.set_poly_coeff(0, Mat::Zero(dim_, dim_));
  return out;
}

double RationalMatrixFunction::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& pp : poles_)
    for (const auto& c : pp.coeff) m = std::max(m, max_abs(c));
  for (const auto& c : poly_) m = std::max(m, max_abs(c));
  return m;
}

RationalMatrixFunction RationalMatrixFunction::commutator(const RationalMatrixFunction& a,
                                                          const RationalMatrixFunction& b) {
  return a * b - b * a;
}

}  // namespace laxflow
