#ifndef TOPOLAT_INDEX_HPP
#define TOPOLAT_INDEX_HPP

#include "topolat/harmonic.hpp"
#include "topolat/invariants.hpp"
#include "topolat/types.hpp"

namespace topolat {

struct IndexReport {
  double kernel = 0;
  double cokernel = 0;
  double index = 0;
  std::string method;   // "fedosov(m)" or "kernel-count"
  int parameter = 0;    // m or L
  double residual = 0;  // m-sweep or truncation residual
};

// T-Ind(a) = Tr((1 - a*a)^m) - Tr((1 - a a*)^m), ordinary trace
IndexReport fedosov_index(const Matrix& a, int m);
// trace-per-volume variant over the interior of a realization geometry
IndexReport fedosov_index_pv(const Matrix& a, int m,
                             const FiniteRealization& geom, int margin);

// Index of the half-line compression P u P from kernel/cokernel counts of
// rectangular truncations (rows extended by the symbol bandwidth so that
// truncation-artifact null vectors at the far corner are excluded).
IndexReport toeplitz_index(const OperatorProfile& symbol, int L);

// Same counting for a concrete (disordered) operator on sites [0, n):
// compression to x >= cut, columns restricted to [cut, cut+K).
IndexReport half_line_index(const Matrix& u, int cut, int K, double tol = 1e-8);

struct SobolevCheck {
  double winding = 0;
  double index = 0;
  double residual = 0;  // |winding + index|
};

// d = 1 instance of the index identity on a chiral clean model
SobolevCheck sobolev_index_check(const ModelSpec& model, int kgrid, int L);

struct DisorderedIndexStats {
  double mean = 0;
  double sigma = 0;   // standard error of the mean
  int seeds = 0;
  double clean_winding = 0;
};

// seed-averaged half-line index of the disordered chiral chain
DisorderedIndexStats disordered_chain_index(const ModelSpec& model, int chain,
                                            int seeds, uint64_t seed0,
                                            int kgrid);

}  // namespace topolat

#endif
