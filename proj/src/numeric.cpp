#include "laxflow/numeric.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace laxflow {

Tolerance& global_tolerance() {
  static Tolerance tol = [] {
    Tolerance t;
    if (const char* env = std::getenv("LAXFLOW_TOL")) {
      char* end = nullptr;
      double v = std::strtod(env, &end);
      if (end != env && v > 0.0) {
        t.rel_tol = v * (t.rel_tol / t.abs_tol);
        t.abs_tol = v;
      }
    }
    return t;
  }();
  return tol;
}

std::string format_cplx(cplx v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "(%.17g,%.17g)", v.real(), v.imag());
  return buf;
}

std::string SpherePoint::str() const { return at_inf ? "inf" : format_cplx(z); }

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

RandomStream::RandomStream(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t RandomStream::next_u64() {
  // xoshiro256** step.
  std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RandomStream::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RandomStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double RandomStream::gaussian() {
  // Box-Muller; rejects u1 == 0 to keep log() finite.
  double u1 = 0.0;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

cplx RandomStream::cgaussian() {
  double re = gaussian();
  double im = gaussian();
  return cplx(re * M_SQRT1_2, im * M_SQRT1_2);
}

Vec RandomStream::cgaussian_vec(int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = cgaussian();
  return v;
}

Mat RandomStream::cgaussian_mat(int rows, int cols) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cgaussian();
  return m;
}

}  // namespace laxflow
