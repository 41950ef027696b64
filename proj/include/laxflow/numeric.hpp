#ifndef LAXFLOW_NUMERIC_HPP
#define LAXFLOW_NUMERIC_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace laxflow {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Failure taxonomy. Every throwing site uses one of these codes so callers
// (CLI, test harness, bindings) can map failures to exit codes uniformly.
enum class ErrorCode {
  InvalidArgument,
  NotInvertibleAtPoint,
  TruncationTooShort,
  EigenvalueCollision,
  NormalizationSingular,
  BranchMatchFailed,
  MatchingSystemSingular,
  DegenerateDraw,
  InterpolationIllConditioned,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotInvertibleAtPoint: return "NotInvertibleAtPoint";
    case ErrorCode::TruncationTooShort: return "TruncationTooShort";
    case ErrorCode::EigenvalueCollision: return "EigenvalueCollision";
    case ErrorCode::NormalizationSingular: return "NormalizationSingular";
    case ErrorCode::BranchMatchFailed: return "BranchMatchFailed";
    case ErrorCode::MatchingSystemSingular: return "MatchingSystemSingular";
    case ErrorCode::DegenerateDraw: return "DegenerateDraw";
    case ErrorCode::InterpolationIllConditioned: return "InterpolationIllConditioned";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

// Global numeric policy. `abs_tol` is the absolute threshold for treating a
// defect as zero, `rel_tol` the relative one (scaled by the magnitude of the
// objects involved). The environment variable LAXFLOW_TOL, when set, replaces
// `abs_tol` and rescales `rel_tol` by the same factor.
struct Tolerance {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;

  double mixed(double scale) const {
    double s = scale < 1.0 ? 1.0 : scale;
    return abs_tol > rel_tol * s ? abs_tol : rel_tol * s;
  }
};

Tolerance& global_tolerance();

// A point on the Riemann sphere. The local coordinate is w = z - z0 at a
// finite point and w = 1/z at infinity.
struct SpherePoint {
  bool at_inf = false;
  cplx z{0.0, 0.0};

  static SpherePoint infinity() { return SpherePoint{true, cplx(0, 0)}; }
  static SpherePoint finite(cplx v) { return SpherePoint{false, v}; }

  bool same_as(const SpherePoint& o, double tol = 1e-12) const {
    if (at_inf != o.at_inf) return false;
    return at_inf || std::abs(z - o.z) <= tol;
  }

  // Lexicographic key used wherever a deterministic ordering of points is
  // needed; infinity sorts after every finite point.
  bool before(const SpherePoint& o) const {
    if (at_inf != o.at_inf) return !at_inf;
    if (at_inf) return false;
    if (z.real() != o.z.real()) return z.real() < o.z.real();
    return z.imag() < o.z.imag();
  }

  std::string str() const;
};

std::string format_cplx(cplx v);

// Deterministic random stream. Uses a fixed xoshiro-style generator and a
// hand-rolled Box-Muller transform so that draws do not depend on the C++
// standard library's distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform01();                    // in [0, 1)
  double uniform(double lo, double hi);  // in [lo, hi)
  double gaussian();                     // standard normal
  cplx cgaussian();                      // complex, independent N(0, 1/2) parts
  Vec cgaussian_vec(int n);
  Mat cgaussian_mat(int rows, int cols);

 private:
  std::uint64_t s_[4];
};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Integer power by repeated multiplication; ipow(0, 0) = 1, negative
// exponents invert. Avoids the NaN that std::pow produces for 0^0.
inline cplx ipow(cplx base, int exponent) {
  if (exponent < 0) return cplx(1, 0) / ipow(base, -exponent);
  cplx r(1, 0);
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

}  // namespace laxflow

#endif
