#ifndef TOPOLAT_LATTICE_HPP
#define TOPOLAT_LATTICE_HPP

#include <cstdint>
#include <functional>

#include "topolat/types.hpp"

namespace topolat {

struct DisorderLaw {
  enum class Kind { none, uniform_onsite, uniform_hopping };
  Kind kind = Kind::none;
  double strength = 0.0;  // W; values drawn i.i.d. uniform on [-W/2, W/2]

  bool empty() const { return kind == Kind::none || strength == 0.0; }
};

// Chiral grading J = diag(1_{N/2}, -1_{N/2}) on orbital space.
struct ChiralGrading {
  int N;
  explicit ChiralGrading(int N_) : N(N_) {
    if (N % 2 != 0) throw Error("NotChiral", "orbital count must be even");
  }
  double sign(int orbital) const { return orbital < N / 2 ? 1.0 : -1.0; }
  Matrix matrix() const {
    Matrix J = Matrix::Zero(N, N);
    for (int a = 0; a < N; ++a) J(a, a) = sign(a);
    return J;
  }
};

// Translation-invariant hopping law + magnetic field + disorder law.
// Displacement map stores every x together with its mirror so that
// t_{-x} = t_x^dagger holds by construction.
struct ModelSpec {
  int d = 1;
  int N = 1;
  std::map<IVec, Matrix> hoppings;
  RealMatrix B;  // antisymmetric, radians
  DisorderLaw disorder;
  bool chiral = false;
  std::string name;  // preset tag, informational

  ModelSpec() = default;
  ModelSpec(int d_, int N_) : d(d_), N(N_), B(RealMatrix::Zero(d_, d_)) {}

  void add_hopping(const IVec& x, const Matrix& t);
  int range() const;  // max ||x||_inf over stored displacements
  void validate() const;
  bool clean() const { return disorder.empty(); }
  bool has_field() const { return B.size() > 0 && B.cwiseAbs().maxCoeff() > 0; }
};

// One concrete Hermitian matrix on a finite site set.
struct FiniteRealization {
  int d = 0;
  int N = 1;
  std::vector<IVec> sites;          // absolute lattice coordinates
  std::map<IVec, int> site_index;   // coordinate -> site number
  SparseMatrix H;                   // (#sites * N) x (#sites * N)
  IVec box;                         // edge lengths for box builds (empty for slabs)
  IVec origin;                      // lower corner of the box
  bool periodic = false;
  int margin = 0;                   // default bulk margin for traces
  uint64_t seed = 0;
  bool chiral = false;

  int n_sites() const { return int(sites.size()); }
  int dim() const { return n_sites() * N; }
  int row(int site, int orb) const { return site * N + orb; }
  Matrix dense() const { return Matrix(H); }

  // sites at distance >= m from every open face (all sites when periodic)
  std::vector<int> interior(int m) const;
};

// magnetic phase of the single hop y -> y + step, step = +-e_j
double hop_phase(const RealMatrix& B, const IVec& y, int axis, int dir);
// phase accumulated by u^x = u_1^{x1} ... u_d^{xd} applied at source site y
double translation_phase(const RealMatrix& B, const IVec& y, const IVec& x);

FiniteRealization build_bulk(const ModelSpec& model, const IVec& box,
                             bool periodic, uint64_t seed,
                             const IVec& origin = {});

// h(k) = sum_x t_x e^{2 pi i k.x}; requires B = 0 and no disorder
Matrix bloch_hamiltonian(const ModelSpec& model, const RealVector& k);

// Magnetic Bloch matrix of size (q*N) for rational flux B_{12} = 2*pi*p/q
// (d = 2). The field is 1-periodic in both components of k and covers the
// magnetic Brillouin zone q times along k_1.
Matrix magnetic_bloch(const ModelSpec& model, int q, const RealVector& k);

// finite image of u^x on the realization's site set (partial isometry)
SparseMatrix magnetic_translation(const ModelSpec& model,
                                  const FiniteRealization& r, const IVec& x);

Matrix grading_matrix(const FiniteRealization& r);

// ---- presets ----------------------------------------------------------

ModelSpec preset_graphene();
ModelSpec preset_honeycomb_lambda(double lambda);
ModelSpec preset_ssh(double lambda);
ModelSpec preset_harper(int p, int q);
ModelSpec preset_chern_two_band(double m);
ModelSpec preset_stacked_ssh(double lambda);  // d=3, decoupled layers

std::vector<std::string> preset_names();
ModelSpec preset_by_name(const std::string& name,
                         const std::map<std::string, double>& params = {});

// ---- model files (JSON) ------------------------------------------------

ModelSpec load_model(const std::string& path);
ModelSpec parse_model(const std::string& text);
std::string emit_model(const ModelSpec& spec);

}  // namespace topolat

#endif
