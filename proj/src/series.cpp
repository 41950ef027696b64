#include "laxflow/series.hpp"

#include <algorithm>
#include <cmath>

namespace laxflow {

namespace {
constexpr int kMaxSpan = 4096;  // guards against runaway exponent ranges

void check_span(int min_order, int trunc_order) {
  require(trunc_order >= min_order, ErrorCode::InvalidArgument,
          "series truncation order below minimal order");
  require(trunc_order - min_order <= kMaxSpan, ErrorCode::InvalidArgument,
          "series exponent span too large");
}
}  // namespace

// ---------------------------------------------------------------------------
// LaurentSeries

LaurentSeries::LaurentSeries(SpherePoint center, int min_order, int trunc_order)
    : center_(center), min_(min_order), trunc_(trunc_order) {
  check_span(min_order, trunc_order);
  c_.assign(static_cast<size_t>(trunc_ - min_), cplx(0, 0));
}

LaurentSeries LaurentSeries::constant(SpherePoint center, cplx value, int trunc_order) {
  return monomial(center, 0, value, trunc_order);
}

LaurentSeries LaurentSeries::monomial(SpherePoint center, int exponent, cplx value,
                                      int trunc_order) {
  require(trunc_order > exponent, ErrorCode::InvalidArgument, "monomial beyond truncation");
  LaurentSeries s(center, exponent, trunc_order);
  s.set_coeff(exponent, value);
  return s;
}

void LaurentSeries::check_center(const LaurentSeries& o) const {
  require(center_.same_as(o.center_), ErrorCode::InvalidArgument,
          "series expanded at different points");
}

cplx LaurentSeries::coeff(int exponent) const {
  if (exponent >= trunc_)
    fail(ErrorCode::TruncationTooShort, "coefficient request beyond truncation order");
  if (exponent < min_) return cplx(0, 0);
  return c_[static_cast<size_t>(exponent - min_)];
}

void LaurentSeries::set_coeff(int exponent, cplx v) {
  require(exponent >= min_ && exponent < trunc_, ErrorCode::InvalidArgument,
          "coefficient outside stored range");
  c_[static_cast<size_t>(exponent - min_)] = v;
}

LaurentSeries& LaurentSeries::operator+=(const LaurentSeries& o) {
  check_center(o);
  LaurentSeries out(center_, std::min(min_, o.min_), std::min(trunc_, o.trunc_));
  for (int k = out.min_; k < out.trunc_; ++k) {
    cplx a = (k >= min_ && k < trunc_) ? c_[static_cast<size_t>(k - min_)] : cplx(0, 0);
    cplx b = (k >= o.min_ && k < o.trunc_) ? o.c_[static_cast<size_t>(k - o.min_)] : cplx(0, 0);
    out.set_coeff(k, a + b);
  }
  *this = std::move(out);
  return *this;
}

LaurentSeries& LaurentSeries::operator-=(const LaurentSeries& o) { return *this += o * cplx(-1, 0); }

LaurentSeries operator*(const LaurentSeries& a, const LaurentSeries& b) {
  a.check_center(b);
  int min = a.min_ + b.min_;
  int trunc = std::min(a.trunc_ + b.min_, b.trunc_ + a.min_);
  check_span(min, trunc);
  LaurentSeries out(a.center_, min, trunc);
  for (int r = min; r < trunc; ++r) {
    cplx acc(0, 0);
    int jlo = std::max(a.min_, r - (b.trunc_ - 1));
    int jhi = std::min(a.trunc_ - 1, r - b.min_);
    for (int j = jlo; j <= jhi; ++j) acc += a.c_[static_cast<size_t>(j - a.min_)] *
                                             b.c_[static_cast<size_t>(r - j - b.min_)];
    out.set_coeff(r, acc);
  }
  return out;
}

LaurentSeries LaurentSeries::operator*(cplx s) const {
  LaurentSeries out = *this;
  for (auto& v : out.c_) v *= s;
  return out;
}

LaurentSeries LaurentSeries::shifted(int k) const {
  LaurentSeries out = *this;
  out.min_ += k;
  out.trunc_ += k;
  return out;
}

LaurentSeries LaurentSeries::derivative() const {
  LaurentSeries out(center_, min_ - 1, trunc_ - 1);
  for (int k = min_; k < trunc_; ++k)
    out.set_coeff(k - 1, coeff(k) * cplx(static_cast<double>(k), 0));
  return out;
}

LaurentSeries LaurentSeries::inverse() const {
  LaurentSeries t = normalized();
  require(!t.c_.empty(), ErrorCode::NotInvertibleAtPoint, "inverse of empty series");
  cplx lead = t.c_[0];
  double scale = t.max_abs_coeff();
  require(std::abs(lead) > 1e-14 * scale, ErrorCode::NotInvertibleAtPoint,
          "leading series coefficient vanishes");
  int mu = t.min_;
  int len = t.trunc_ - t.min_;
  // Inverse has exponents starting at -mu; coefficients determined up to the
  // relative order of the input data.
  LaurentSeries out(center_, -mu, -mu + len);
  std::vector<cplx> inv(static_cast<size_t>(len), cplx(0, 0));
  inv[0] = cplx(1, 0) / lead;
  for (int k = 1; k < len; ++k) {
    cplx acc(0, 0);
    for (int j = 1; j <= k; ++j) acc += t.c_[static_cast<size_t>(j)] * inv[static_cast<size_t>(k - j)];
    inv[static_cast<size_t>(k)] = -acc / lead;
  }
  for (int k = 0; k < len; ++k) out.set_coeff(-mu + k, inv[static_cast<size_t>(k)]);
  return out;
}

LaurentSeries LaurentSeries::pow(int exponent) const {
  require(exponent >= 0, ErrorCode::InvalidArgument, "negative series power");
  // The identity seed carries enough slack that the base's truncation alone
  // determines the result's truncation, t + (n-1)*min.
  int slack = (std::abs(min_) + 1) * (exponent + 1) + 4;
  LaurentSeries out = LaurentSeries::constant(center_, cplx(1, 0), std::max(trunc_ + slack, 1));
  for (int i = 0; i < exponent; ++i) out = out * (*this);
  return out;
}

cplx LaurentSeries::residue() const { return coeff(-1); }

LaurentSeries LaurentSeries::principal_part() const {
  require(trunc_ >= 0, ErrorCode::TruncationTooShort,
          "principal part needs all negative orders resolved");
  LaurentSeries out(center_, std::min(min_, 0), trunc_);
  for (int k = min_; k < 0; ++k) out.set_coeff(k, coeff(k));
  return out;
}

LaurentSeries LaurentSeries::truncated(int new_trunc) const {
  require(new_trunc <= trunc_, ErrorCode::TruncationTooShort, "cannot extend truncation");
  LaurentSeries out(center_, std::min(min_, new_trunc), new_trunc);
  for (int k = out.min_; k < new_trunc; ++k) out.set_coeff(k, coeff(k));
  return out;
}

LaurentSeries LaurentSeries::normalized(double rel_eps) const {
  double scale = max_abs_coeff();
  int first = min_;
  while (first < trunc_ && std::abs(coeff(first)) <= rel_eps * scale) ++first;
  if (first == min_) return *this;
  LaurentSeries out(center_, first, trunc_);
  for (int k = first; k < trunc_; ++k) out.set_coeff(k, coeff(k));
  return out;
}

double LaurentSeries::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& v : c_) m = std::max(m, std::abs(v));
  return m;
}

double LaurentSeries::max_abs_below(int exponent) const {
  double m = 0.0;
  for (int k = min_; k < std::min(exponent, trunc_); ++k) m = std::max(m, std::abs(coeff(k)));
  return m;
}

cplx LaurentSeries::evaluate(cplx w) const {
  cplx acc(0, 0);
  for (int k = trunc_ - 1; k >= min_; --k) acc = acc * w + coeff(k);
  return acc * ipow(w, min_);
}

// ---------------------------------------------------------------------------
// MatrixLaurentSeries

MatrixLaurentSeries::MatrixLaurentSeries(SpherePoint center, int dim, int min_order,
                                         int trunc_order)
    : center_(center), dim_(dim), min_(min_order), trunc_(trunc_order) {
  check_span(min_order, trunc_order);
  require(dim > 0, ErrorCode::InvalidArgument, "series dimension must be positive");
  c_.assign(static_cast<size_t>(trunc_ - min_), Mat::Zero(dim, dim));
}

MatrixLaurentSeries MatrixLaurentSeries::constant(SpherePoint center, const Mat& value,
                                                  int trunc_order) {
  return monomial(center, 0, value, trunc_order);
}

MatrixLaurentSeries MatrixLaurentSeries::monomial(SpherePoint center, int exponent,
                                                  const Mat& value, int trunc_order) {
  require(value.rows() == value.cols(), ErrorCode::InvalidArgument, "matrix series must be square");
  require(trunc_order > exponent, ErrorCode::InvalidArgument, "monomial beyond truncation");
  MatrixLaurentSeries s(center, static_cast<int>(value.rows()), exponent, trunc_order);
  s.set_coeff(exponent, value);
  return s;
}

void MatrixLaurentSeries::check_center(const MatrixLaurentSeries& o) const {
  require(center_.same_as(o.center_), ErrorCode::InvalidArgument,
          "series expanded at different points");
  require(dim_ == o.dim_, ErrorCode::InvalidArgument, "matrix series dimension mismatch");
}

Mat MatrixLaurentSeries::coeff(int exponent) const {
  if (exponent >= trunc_)
    fail(ErrorCode::TruncationTooShort, "coefficient request beyond truncation order");
  if (exponent < min_) return Mat::Zero(dim_, dim_);
  return c_[static_cast<size_t>(exponent - min_)];
}

void MatrixLaurentSeries::set_coeff(int exponent, const Mat& v) {
  require(exponent >= min_ && exponent < trunc_, ErrorCode::InvalidArgument,
          "coefficient outside stored range");
  require(v.rows() == dim_ && v.cols() == dim_, ErrorCode::InvalidArgument,
          "coefficient dimension mismatch");
  c_[static_cast<size_t>(exponent - min_)] = v;
}

void MatrixLaurentSeries::add_to_coeff(int exponent, const Mat& v) {
  require(exponent >= min_ && exponent < trunc_, ErrorCode::InvalidArgument,
          "coefficient outside stored range");
  c_[static_cast<size_t>(exponent - min_)] += v;
}

MatrixLaurentSeries& MatrixLaurentSeries::operator+=(const MatrixLaurentSeries& o) {
  check_center(o);
  MatrixLaurentSeries out(center_, dim_, std::min(min_, o.min_), std::min(trunc_, o.trunc_));
  for (int k = out.min_; k < out.trunc_; ++k) out.set_coeff(k, coeff(k) + o.coeff(k));
  *this = std::move(out);
  return *this;
}

MatrixLaurentSeries& MatrixLaurentSeries::operator-=(const MatrixLaurentSeries& o) {
  return *this += o * cplx(-1, 0);
}

MatrixLaurentSeries operator*(const MatrixLaurentSeries& a, const MatrixLaurentSeries& b) {
  a.check_center(b);
  int min = a.min_ + b.min_;
  int trunc = std::min(a.trunc_ + b.min_, b.trunc_ + a.min_);
  check_span(min, trunc);
  MatrixLaurentSeries out(a.center_, a.dim_, min, trunc);
  for (int r = min; r < trunc; ++r) {
    Mat acc = Mat::Zero(a.dim_, a.dim_);
    int jlo = std::max(a.min_, r - (b.trunc_ - 1));
    int jhi = std::min(a.trunc_ - 1, r - b.min_);
    for (int j = jlo; j <= jhi; ++j)
      acc += a.c_[static_cast<size_t>(j - a.min_)] * b.c_[static_cast<size_t>(r - j - b.min_)];
    out.set_coeff(r, acc);
  }
  return out;
}

MatrixLaurentSeries operator*(const LaurentSeries& s, const MatrixLaurentSeries& m) {
  require(s.center().same_as(m.center()), ErrorCode::InvalidArgument,
          "series expanded at different points");
  int min = s.min_order() + m.min_order();
  int trunc = std::min(s.trunc_order() + m.min_order(), m.trunc_order() + s.min_order());
  check_span(min, trunc);
  MatrixLaurentSeries out(m.center(), m.dim(), min, trunc);
  for (int r = min; r < trunc; ++r) {
    Mat acc = Mat::Zero(m.dim(), m.dim());
    int jlo = std::max(s.min_order(), r - (m.trunc_order() - 1));
    int jhi = std::min(s.trunc_order() - 1, r - m.min_order());
    for (int j = jlo; j <= jhi; ++j) acc += s.coeff(j) * m.coeff(r - j);
    out.set_coeff(r, acc);
  }
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::operator*(cplx s) const {
  MatrixLaurentSeries out = *this;
  for (auto& v : out.c_) v *= s;
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::left_mul(const Mat& a) const {
  MatrixLaurentSeries out = *this;
  for (auto& v : out.c_) v = a * v;
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::right_mul(const Mat& a) const {
  MatrixLaurentSeries out = *this;
  for (auto& v : out.c_) v = v * a;
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::transpose() const {
  MatrixLaurentSeries out = *this;
  for (auto& v : out.c_) v = v.transpose().eval();
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::shifted(int k) const {
  MatrixLaurentSeries out = *this;
  out.min_ += k;
  out.trunc_ += k;
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::derivative() const {
  MatrixLaurentSeries out(center_, dim_, min_ - 1, trunc_ - 1);
  for (int k = min_; k < trunc_; ++k)
    out.set_coeff(k - 1, coeff(k) * cplx(static_cast<double>(k), 0));
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::inverse() const {
  MatrixLaurentSeries t = normalized();
  require(!t.c_.empty(), ErrorCode::NotInvertibleAtPoint, "inverse of empty series");
  const Mat& lead = t.c_[0];
  Eigen::FullPivLU<Mat> lu(lead);
  require(lu.isInvertible(), ErrorCode::NotInvertibleAtPoint,
          "leading series coefficient is singular");
  Mat lead_inv = lu.inverse();
  int mu = t.min_;
  int len = t.trunc_ - t.min_;
  MatrixLaurentSeries out(center_, dim_, -mu, -mu + len);
  std::vector<Mat> inv(static_cast<size_t>(len));
  inv[0] = lead_inv;
  for (int k = 1; k < len; ++k) {
    Mat acc = Mat::Zero(dim_, dim_);
    for (int j = 1; j <= k; ++j) acc += t.c_[static_cast<size_t>(j)] * inv[static_cast<size_t>(k - j)];
    inv[static_cast<size_t>(k)] = -lead_inv * acc;
  }
  for (int k = 0; k < len; ++k) out.set_coeff(-mu + k, inv[static_cast<size_t>(k)]);
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::pow(int exponent) const {
  require(exponent >= 0, ErrorCode::InvalidArgument, "negative series power");
  int slack = (std::abs(min_) + 1) * (exponent + 1) + 4;
  MatrixLaurentSeries out = MatrixLaurentSeries::constant(center_, Mat::Identity(dim_, dim_),
                                                          std::max(trunc_ + slack, 1));
  for (int i = 0; i < exponent; ++i) out = out * (*this);
  return out;
}

LaurentSeries MatrixLaurentSeries::trace() const {
  LaurentSeries out(center_, min_, trunc_);
  for (int k = min_; k < trunc_; ++k) out.set_coeff(k, coeff(k).trace());
  return out;
}

Mat MatrixLaurentSeries::residue() const { return coeff(-1); }

MatrixLaurentSeries MatrixLaurentSeries::principal_part() const {
  require(trunc_ >= 0, ErrorCode::TruncationTooShort,
          "principal part needs all negative orders resolved");
  MatrixLaurentSeries out(center_, dim_, std::min(min_, 0), trunc_);
  for (int k = min_; k < 0; ++k) out.set_coeff(k, coeff(k));
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::truncated(int new_trunc) const {
  require(new_trunc <= trunc_, ErrorCode::TruncationTooShort, "cannot extend truncation");
  MatrixLaurentSeries out(center_, dim_, std::min(min_, new_trunc), new_trunc);
  for (int k = out.min_; k < new_trunc; ++k) out.set_coeff(k, coeff(k));
  return out;
}

MatrixLaurentSeries MatrixLaurentSeries::normalized(double rel_eps) const {
  double scale = max_abs_coeff();
  int first = min_;
  while (first < trunc_ && max_abs(coeff(first)) <= rel_eps * scale) ++first;
  if (first == min_) return *this;
  MatrixLaurentSeries out(center_, dim_, first, trunc_);
  for (int k = first; k < trunc_; ++k) out.set_coeff(k, coeff(k));
  return out;
}

double MatrixLaurentSeries::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& v : c_) m = std::max(m, max_abs(v));
  return m;
}

double MatrixLaurentSeries::max_abs_below(int exponent) const {
  double m = 0.0;
  for (int k = min_; k < std::min(exponent, trunc_); ++k) m = std::max(m, max_abs(coeff(k)));
  return m;
}

Mat MatrixLaurentSeries::evaluate(cplx w) const {
  Mat acc = Mat::Zero(dim_, dim_);
  for (int k = trunc_ - 1; k >= min_; --k) acc = acc * w + coeff(k);
  return acc * ipow(w, min_);
}

}  // namespace laxflow
