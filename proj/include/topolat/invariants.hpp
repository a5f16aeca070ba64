#ifndef TOPOLAT_INVARIANTS_HPP
#define TOPOLAT_INVARIANTS_HPP

#include "topolat/harmonic.hpp"
#include "topolat/lattice.hpp"
#include "topolat/spectral.hpp"
#include "topolat/types.hpp"

namespace topolat {

struct Direction {
  RealVector v;               // unit vector
  std::optional<IVec> integer;  // primitive integer vector when known

  static Direction axis(int d, int j);
  static Direction of(const RealVector& raw);
  static Direction of(const IVec& raw);
};

struct InvariantResult {
  double value = 0;
  double error_estimate = 0;
  std::string path;  // kspace | realspace
  std::map<std::string, std::string> params;
};

// k-space field abstraction: matrix-valued function on [0,1)^d with analytic
// partial derivatives when available.
struct BlochMap {
  int d = 0;
  int dim = 0;            // matrix size
  double trace_factor = 1;  // T(1_dim) * trace_factor = N
  std::function<Matrix(const RealVector&)> h;
  std::function<Matrix(const RealVector&, int)> dh;  // d/dk_j, optional
};

BlochMap make_bloch(const ModelSpec& model);
BlochMap make_magnetic_bloch_map(const ModelSpec& model, int q);

// Chern cocycle normalization constants
cplx chern_constant(int n);

// ---- odd pairings --------------------------------------------------------

// Winding number: slice winding of det u along each axis with v_j != 0,
// averaged over the transverse grid (nodes shifted by half a spacing),
// weighted by v_j. Equals +1 for u = u^{e_j} along e_j.
InvariantResult winding_number_kspace(
    const std::function<Matrix(const RealVector&)>& u, int d,
    const Direction& v, int ngrid);

// convenience: winding of the Fermi unitary of a chiral clean model
InvariantResult winding_number_model(const ModelSpec& model, const Direction& v,
                                     int ngrid);

// Real-space path: winding = sum_j v_j T(u^* [X_j, u]) with the interior
// trace over an open box; u = Fermi unitary of the box realization.
InvariantResult winding_number_real(const ModelSpec& model, const Direction& v,
                                    int L, int margin);

// odd Chern pairing on profiles (clean, B = 0); n = 1 delegates to
// winding_number on the symbol
InvariantResult odd_chern(const OperatorProfile& u,
                          const std::vector<Direction>& frame, int ngrid = 0);

// ---- even pairings ---------------------------------------------------------

InvariantResult even_chern_kspace(const BlochMap& bm, double E_F,
                                  const Direction& a, const Direction& b,
                                  int ngrid);

// real-space: p on an open box, derivations -i[X_j, .], interior trace
InvariantResult even_chern_real(const Matrix& p, const FiniteRealization& geom,
                                const Direction& a, const Direction& b,
                                int margin);

// ---- sweeps ---------------------------------------------------------------

struct SweepRow {
  double parameter;
  double value;
  double error;
  std::string status;  // "ok" or an error code
};

std::vector<SweepRow> weak_invariant_sweep(
    const std::function<InvariantResult(double)>& op, double lo, double hi,
    double step, int threads = 1);

}  // namespace topolat

#endif
