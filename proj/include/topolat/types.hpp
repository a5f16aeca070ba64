#ifndef TOPOLAT_TYPES_HPP
#define TOPOLAT_TYPES_HPP

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace topolat {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using IVec = std::vector<int>;

inline constexpr double pi = 3.14159265358979323846;
inline const cplx iu{0.0, 1.0};

// Domain error carrying a stable code name (surfaced verbatim by the CLI).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline IVec operator+(const IVec& a, const IVec& b) {
  IVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline IVec operator-(const IVec& a) {
  IVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

inline double norm2(const IVec& x) {
  double s = 0;
  for (int c : x) s += double(c) * c;
  return std::sqrt(s);
}

inline int norm_inf(const IVec& x) {
  int m = 0;
  for (int c : x) m = std::max(m, std::abs(c));
  return m;
}

// splitmix64; used as a counter-based generator so disorder values are a
// pure function of (seed, lattice coordinate) and configuration shifts are
// testable.
inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t hash_combine(uint64_t h, uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline uint64_t hash_coord(uint64_t seed, const IVec& x, uint64_t tag = 0) {
  uint64_t h = splitmix64(seed ^ (tag * 0x2545f4914f6cdd1dULL));
  for (int c : x) h = hash_combine(h, uint64_t(int64_t(c)) + 0x8000000000ULL);
  return h;
}

// uniform double in [0,1)
inline double uniform01(uint64_t h) {
  return double(h >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace topolat

#endif
