#ifndef TOPOLAT_HALFSPACE_HPP
#define TOPOLAT_HALFSPACE_HPP

#include "topolat/invariants.hpp"
#include "topolat/lattice.hpp"
#include "topolat/spectral.hpp"
#include "topolat/types.hpp"

namespace topolat {

struct CutPlane {
  Direction v;      // surface normal
  double r = 0;     // offset
  bool rational = false;
  IVec g;           // primitive integer normal (rational case)
  double lambda_xi = 0;  // min positive value of v.x over Z^d (rational case)
  int K = 12;       // enumeration bound used for classification
};

CutPlane make_cut(const RealVector& v_raw, double r, int K = 12);
CutPlane make_cut(const IVec& v_raw, double r);

// k-tilde: boundary perturbation supported on a strip at the cut
struct BoundaryTerm {
  enum class Kind { none, random_chiral };
  Kind kind = Kind::none;
  double strength = 0;  // operator norm
  int strip = 1;        // layers of depth (units of W_phys/W)
  uint64_t seed = 0;
};

struct SlabOptions {
  int W = 32;   // depth in sites per column: v.x + r in (0, W*|v_j|]
  int L = 64;   // parallel extent in columns per parallel axis
  bool parallel_periodic = false;  // axis-aligned cuts only
};

struct SlabRealization {
  FiniteRealization real;
  CutPlane cut;
  SlabOptions opt;
  int axis_j = 0;                // depth axis = argmax |v_j|
  std::vector<int> par_axes;
  double W_phys = 0;
  std::vector<double> depth;     // v.x + r per site
  std::vector<long> column;      // flattened parallel column index per site
  long n_columns = 0;
  int hopping_range = 1;

  bool chiral() const { return real.chiral; }
};

SlabRealization restrict_halfspace(const ModelSpec& model, const CutPlane& cut,
                                   const SlabOptions& opt,
                                   const BoundaryTerm& ktilde, uint64_t seed);

// smooth switch chi_s (0 below 0, 1 above eps, C-infinity in between)
double smooth_switch(double t, double eps);
SlabRealization smooth_restrict(const ModelSpec& model, const CutPlane& cut,
                                const SlabOptions& opt, double eps_switch,
                                uint64_t seed);

struct ZeroMode {
  double value = 0;        // |eigenvalue| bound (singular value / |E|)
  double chirality = 0;    // <J>
  double near_weight = 0;  // weight on the near half of the slab
  RealVector column_mass;  // |psi|^2 per parallel column
};

struct ZeroModeReport {
  std::vector<ZeroMode> modes;
  double eps_zero = 0;
  double gap_to_next = 0;    // first excluded |eigenvalue|
  double separation = 0;     // gap_to_next / largest included value
  bool separation_warning = false;
  int n_plus = 0, n_minus = 0;  // chirality-resolved counts at the near edge
};

ZeroModeReport zero_modes(const SlabRealization& slab, double eps_zero = -1);

// Signed surface density per unit Euclidean surface area.
// column path: |v_j| * (signed interior column mass) / (#interior columns);
// the rational path (Lambda_xi bookkeeping) is exposed for the consistency
// invariant and agrees identically on rational cuts.
InvariantResult signed_surface_density(const SlabRealization& slab,
                                       const ZeroModeReport& report);
double signed_surface_density_rational(const SlabRealization& slab,
                                       const ZeroModeReport& report);

InvariantResult offset_average(
    const std::function<InvariantResult(double)>& op, const CutPlane& cut,
    const std::vector<double>& r_samples);

struct BbcRecord {
  InvariantResult bulk;
  InvariantResult edge;
  double gap = 0;  // |bulk - edge|
};

BbcRecord bbc_check(const ModelSpec& model, const CutPlane& cut, int kgrid,
                    const SlabOptions& opt, const BoundaryTerm& ktilde,
                    uint64_t seed = 0, int offsets = 1);

}  // namespace topolat

#endif
