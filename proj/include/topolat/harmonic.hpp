#ifndef TOPOLAT_HARMONIC_HPP
#define TOPOLAT_HARMONIC_HPP

#include "topolat/lattice.hpp"
#include "topolat/spectral.hpp"
#include "topolat/types.hpp"

namespace topolat {

// Displacement-indexed Fourier coefficients psi_x of a covariant operator.
// Coefficients are constant matrices (disorder averages); the algebra
// operations below therefore assume a clean, field-free setting where
// coefficients commute with the translations.
struct OperatorProfile {
  int d = 1;
  int N = 1;
  std::map<IVec, Matrix> coeff;
  std::map<IVec, double> variance;  // estimator variance per displacement

  OperatorProfile() = default;
  OperatorProfile(int d_, int N_) : d(d_), N(N_) {}

  int support_radius() const;
  void set(const IVec& x, const Matrix& m, double var = 0);
  Matrix at(const IVec& x) const;  // zero block when absent
  void prune(double tol);

  OperatorProfile adjoint() const;
  OperatorProfile operator*(const OperatorProfile& o) const;  // convolution
  OperatorProfile operator+(const OperatorProfile& o) const;
  OperatorProfile operator-(const OperatorProfile& o) const;
  OperatorProfile scaled(cplx s) const;
  static OperatorProfile identity(int d, int N);

  // derivation: psi_x -> -i x_j psi_x
  OperatorProfile derive(int axis) const;
  OperatorProfile derive_dir(const RealVector& v) const;

  cplx trace() const;  // T(a) = tr psi_0
  Matrix symbol(const RealVector& k) const;  // sum_x psi_x e^{2 pi i k.x}
};

// phase-corrected estimate of psi_x from finite realizations
OperatorProfile fourier_profile(const ModelSpec& model,
                                const FiniteRealization& r, const Matrix& op,
                                int margin, int max_range);
OperatorProfile profile_of_model(const ModelSpec& model);
// profile of a matrix function of a clean Bloch model, estimated by exact
// quadrature over an n^d k-grid (coefficients of e.g. p_F or u_F)
OperatorProfile profile_from_bloch(
    const ModelSpec& model, const std::function<Matrix(const Matrix&)>& f,
    int ngrid, int max_range, double tol = 1e-14);

// ---- Littlewood-Paley windows -------------------------------------------

struct DyadicWindows {
  int jmax;
  explicit DyadicWindows(int jmax_);
  // normalized bump phi with support (1/2, 2)
  static double phi(double t);
  double weight(int j, double absx) const;   // W_j(x)
  double weight(int j, const IVec& x) const { return weight(j, norm2(x)); }
};

OperatorProfile multiplier_apply(const std::function<double(const IVec&)>& f,
                                 const OperatorProfile& a);
OperatorProfile window_apply(const DyadicWindows& w, int j,
                             const OperatorProfile& a);

// materialize a profile as a matrix on an open box (B = 0 covariance)
Matrix materialize(const OperatorProfile& a, const IVec& box);

// ---- norms ---------------------------------------------------------------

struct NormBox {
  IVec box;    // trace box (empty = auto from support)
  int margin = -1;  // -1 = auto
};

// ||a||_p = T(|a|^p)^{1/p} via the interior trace of the materialized matrix;
// p = inf returns the operator norm
double lp_norm(const OperatorProfile& a, double p, const NormBox& nb = {});
double lp_norm_matrix(const Matrix& a, double p, const FiniteRealization& geom,
                      int margin);

struct BesovParams {
  double s;
  double p;
  double q;
};

double besov_norm(const OperatorProfile& a, const BesovParams& bp,
                  const NormBox& nb = {}, int jmax = -1);

// finite-difference equivalent norm (Theorem-level equivalence, not equality):
// ||a||_p + (sum over the t-grid of t^{-sq} w^N(a,t)^q dt/t)^{1/q}
double finite_difference_norm(const OperatorProfile& a, double s, double p,
                              double q, int Nsm, int t_per_octave = 1,
                              int octaves = 10, const NormBox& nb = {});
// N-th modulus of smoothness at scale t
double modulus_of_smoothness(const OperatorProfile& a, double p, int Nsm,
                             double t, const NormBox& nb = {});

// ---- Hankel --------------------------------------------------------------

// d = 1 Hankel matrix H_a = P a (1-P) on the truncation: H[i,j] = psi_{i+j+1}
Matrix hankel_operator(const OperatorProfile& a, int L);
// d >= 2: P a (1-P) materialized on a box split by the cut normal offset r
Matrix hankel_operator_cut(const OperatorProfile& a, const IVec& box,
                           const RealVector& v, double r);

double schatten_norm(const Matrix& a, double p);

struct PellerReport {
  std::vector<double> ratios;
  double sup = 0;
  int L = 0;
  bool converged = true;
};

PellerReport peller_ratio(const std::vector<OperatorProfile>& symbols, double p,
                          int L, double rel_tol = 0.05);

}  // namespace topolat

#endif
