#ifndef TOPOLAT_SPECTRAL_HPP
#define TOPOLAT_SPECTRAL_HPP

#include "topolat/lattice.hpp"
#include "topolat/types.hpp"

namespace topolat {

struct EigenSystem {
  RealVector values;  // ascending
  Matrix vectors;     // columns

  int dim() const { return int(values.size()); }
  // f applied through the spectral representation
  Matrix apply(const std::function<double(double)>& f) const;
};

EigenSystem eigensystem(const Matrix& H);
// eigenvalues only (no vectors); faster for DOS sampling
RealVector eigenvalues_of(const Matrix& H);
// singular value decomposition A = U S V^dagger
void svd(const Matrix& A, Matrix& U, RealVector& S, Matrix& V);
RealVector singular_values(const Matrix& A);

// trace per unit volume: average of orbital-traced diagonal elements over
// interior sites (all sites when periodic)
cplx trace_per_volume(const FiniteRealization& r, const Matrix& op, int margin);
cplx trace_per_volume(const FiniteRealization& r, const SparseMatrix& op, int margin);

Matrix fermi_projection(const EigenSystem& es, double E_F,
                        double tol_degenerate = -1);

// Fermi unitary: polar factor of the upper-right chiral block. The k-space
// variant acts on a single Bloch matrix; the matrix variant on a finite
// chiral realization, with plus/minus index sets from the grading.
Matrix fermi_unitary_block(const Matrix& h_or_sgn_block, double tol_kernel);
Matrix fermi_unitary_bloch(const Matrix& hk, double tol_kernel = 1e-8);
Matrix fermi_unitary_real(const FiniteRealization& r, double tol_kernel = -1);

Matrix approx_sign(const EigenSystem& es, double eps);
Matrix approx_indicator(const EigenSystem& es, double eps);

struct DosHistogram {
  RealVector edges;  // size bins+1
  RealVector mass;   // size bins, sums to N
  std::string provenance;
  int bins() const { return int(mass.size()); }
  double mass_in(double lo, double hi) const;  // overlap-weighted
  double bandwidth() const { return edges[edges.size() - 1] - edges[0]; }
};

struct DosOptions {
  int bins = 512;
  int kgrid = 0;          // clean path: n^d grid (0 = auto)
  int samples = 1;        // disorder path: number of seeds
  IVec box;               // disorder path box (empty = auto)
  uint64_t seed = 1;
  int threads = 1;
};

DosHistogram dos(const ModelSpec& model, const DosOptions& opt);

struct PseudogapFit {
  double gamma = 0;
  double stderr_ = 0;
  bool gap_detected = false;
  double eps_lo = 0, eps_hi = 0;
  int points = 0;
};

PseudogapFit pseudogap_exponent(const DosHistogram& dos, double E0,
                                double eps_lo = -1, double eps_hi = -1);

// ---- sparse interior eigensolver ---------------------------------------

struct InteriorPair {
  double value;
  Vector vector;
  double residual;  // ||A x - value x||
};

// Lanczos with full reorthogonalization on OP = (H - sigma)^{-1} (sparse LU).
// Returns converged pairs nearest sigma, at most `want`, residual-checked.
std::vector<InteriorPair> interior_eigs(const SparseMatrix& H, double sigma,
                                        int want, double tol = 1e-10,
                                        int max_iter = 0);

// Smallest Ritz pairs of a Hermitian PSD sparse matrix via shifted-inverse
// Lanczos with a Cholesky factor of (A + shift). Returns up to `want` pairs
// sorted ascending, each with its explicit residual; callers decide adequacy.
std::vector<InteriorPair> smallest_psd_eigs(const SparseMatrix& A, int want,
                                            double shift, int steps = 0);

}  // namespace topolat

#endif
