#include "topolat/spectral.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <thread>

#include <Eigen/SparseLU>
#include <lapacke.h>

namespace topolat {

Matrix EigenSystem::apply(const std::function<double(double)>& f) const {
  RealVector fv(values.size());
  for (int i = 0; i < values.size(); ++i) fv[i] = f(values[i]);
  return vectors * fv.asDiagonal() * vectors.adjoint();
}

EigenSystem eigensystem(const Matrix& H) {
  int n = int(H.rows());
  EigenSystem es;
  es.values.resize(n);
  es.vectors = H;
  int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(es.vectors.data()),
                            n, es.values.data());
  if (info != 0) throw Error("EigensolverFailure", "zheevd info=" + std::to_string(info));
  return es;
}

RealVector eigenvalues_of(const Matrix& H) {
  int n = int(H.rows());
  Matrix work = H;
  RealVector vals(n);
  int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                            reinterpret_cast<lapack_complex_double*>(work.data()),
                            n, vals.data());
  if (info != 0) throw Error("EigensolverFailure", "zheevd info=" + std::to_string(info));
  return vals;
}

void svd(const Matrix& A, Matrix& U, RealVector& S, Matrix& V) {
  int m = int(A.rows()), n = int(A.cols());
  Matrix work = A;
  int mn = std::min(m, n);
  U.resize(m, mn);
  S.resize(mn);
  Matrix Vt(mn, n);
  int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', m, n,
                            reinterpret_cast<lapack_complex_double*>(work.data()), m,
                            S.data(),
                            reinterpret_cast<lapack_complex_double*>(U.data()), m,
                            reinterpret_cast<lapack_complex_double*>(Vt.data()), mn);
  if (info != 0) throw Error("EigensolverFailure", "zgesdd info=" + std::to_string(info));
  V = Vt.adjoint();
}

RealVector singular_values(const Matrix& A) {
  int m = int(A.rows()), n = int(A.cols());
  Matrix work = A;
  int mn = std::min(m, n);
  RealVector S(mn);
  int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n,
                            reinterpret_cast<lapack_complex_double*>(work.data()), m,
                            S.data(), nullptr, m, nullptr, mn);
  if (info != 0) throw Error("EigensolverFailure", "zgesdd info=" + std::to_string(info));
  return S;
}

namespace {

cplx interior_diag_average(const FiniteRealization& r,
                           const std::function<cplx(int)>& diag, int margin) {
  auto idx = r.interior(margin);
  if (idx.empty()) throw Error("EmptyInterior", "margin leaves no interior sites");
  cplx s = 0;
  for (int i : idx)
    for (int a = 0; a < r.N; ++a) s += diag(r.row(i, a));
  return s / double(idx.size());
}

}  // namespace

cplx trace_per_volume(const FiniteRealization& r, const Matrix& op, int margin) {
  if (!r.periodic && 2 * margin >= *std::min_element(r.box.begin(), r.box.end()))
    throw Error("EmptyInterior", "margin at least half the box");
  return interior_diag_average(r, [&](int i) { return op(i, i); }, margin);
}

cplx trace_per_volume(const FiniteRealization& r, const SparseMatrix& op, int margin) {
  return interior_diag_average(r, [&](int i) { return op.coeff(i, i); }, margin);
}

Matrix fermi_projection(const EigenSystem& es, double E_F, double tol_degenerate) {
  double scale = std::max(es.values.cwiseAbs().maxCoeff(), 1.0);
  double tol = tol_degenerate < 0 ? 1e-10 * scale : tol_degenerate;
  for (int i = 0; i < es.dim(); ++i)
    if (std::abs(es.values[i] - E_F) < tol)
      throw Error("EigenvalueAtFermiLevel",
                  "eigenvalue within tolerance of the Fermi level");
  return es.apply([&](double x) { return x <= E_F ? 1.0 : 0.0; });
}

Matrix fermi_unitary_block(const Matrix& A, double tol_kernel) {
  Matrix U, V;
  RealVector S;
  svd(A, U, S, V);
  if (S[S.size() - 1] <= tol_kernel)
    throw Error("KernelPresent", "singular value at or below kernel tolerance");
  return U * V.adjoint();
}

Matrix fermi_unitary_bloch(const Matrix& hk, double tol_kernel) {
  int N = int(hk.rows());
  if (N % 2 != 0) throw Error("NotChiral", "odd orbital dimension");
  int h = N / 2;
  if (hk.topLeftCorner(h, h).cwiseAbs().maxCoeff() > 1e-10 ||
      hk.bottomRightCorner(h, h).cwiseAbs().maxCoeff() > 1e-10)
    throw Error("NotChiral", "Bloch matrix has diagonal blocks");
  return fermi_unitary_block(hk.topRightCorner(h, h), tol_kernel);
}

Matrix fermi_unitary_real(const FiniteRealization& r, double tol_kernel) {
  if (!r.chiral || r.N % 2 != 0) throw Error("NotChiral", "realization is not chiral");
  Matrix H = r.dense();
  EigenSystem es = eigensystem(H);
  double scale = std::max(es.values.cwiseAbs().maxCoeff(), 1.0);
  double tol = tol_kernel < 0 ? 1e-8 * scale : tol_kernel;
  double mn = es.values.cwiseAbs().minCoeff();
  if (mn <= tol) throw Error("KernelPresent", "eigenvalue inside kernel tolerance");
  Matrix sgn = es.apply([](double x) { return x > 0 ? 1.0 : -1.0; });
  int half = r.dim() / 2;
  std::vector<int> plus, minus;
  plus.reserve(half);
  minus.reserve(half);
  for (int i = 0; i < r.n_sites(); ++i)
    for (int a = 0; a < r.N; ++a)
      (a < r.N / 2 ? plus : minus).push_back(r.row(i, a));
  Matrix u(half, half);
  for (int c = 0; c < half; ++c)
    for (int rw = 0; rw < half; ++rw) u(rw, c) = sgn(plus[rw], minus[c]);
  return u;
}

Matrix approx_sign(const EigenSystem& es, double eps) {
  return es.apply([&](double x) { return (2.0 / pi) * std::atan(x / eps); });
}

Matrix approx_indicator(const EigenSystem& es, double eps) {
  return es.apply([&](double x) { return 0.5 - std::atan(x / eps) / pi; });
}

double DosHistogram::mass_in(double lo, double hi) const {
  double s = 0;
  for (int b = 0; b < bins(); ++b) {
    double l = std::max(lo, edges[b]), h = std::min(hi, edges[b + 1]);
    if (h <= l) continue;
    s += mass[b] * (h - l) / (edges[b + 1] - edges[b]);
  }
  return s;
}

namespace {

void bin_values(const RealVector& edges, RealVector& mass,
                const RealVector& vals, const RealVector& weights) {
  int bins = int(mass.size());
  double lo = edges[0], hi = edges[bins];
  for (int i = 0; i < vals.size(); ++i) {
    double v = vals[i];
    int b = v <= lo ? 0 : v >= hi ? bins - 1
                                  : int((v - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    mass[b] += weights[i];
  }
}

}  // namespace

DosHistogram dos(const ModelSpec& model, const DosOptions& opt) {
  DosHistogram h;
  bool clean_path = model.clean() && !model.has_field();
  // operator-norm bound from the hopping blocks
  double bound = 0;
  for (auto& [x, t] : model.hoppings) bound += t.operatorNorm();
  bound += model.disorder.strength / 2 + 1e-9;
  h.edges.setLinSpaced(opt.bins + 1, -bound, bound);
  h.mass = RealVector::Zero(opt.bins);

  if (clean_path) {
    int n = opt.kgrid > 0 ? opt.kgrid : 120;
    long total = 1;
    for (int j = 0; j < model.d; ++j) total *= n;
    RealVector w = RealVector::Constant(model.N, 1.0 / double(total));
    RealVector k(model.d);
    IVec c(model.d, 0);
    for (long i = 0; i < total; ++i) {
      for (int j = 0; j < model.d; ++j) k[j] = (c[j] + 0.5) / double(n);
      bin_values(h.edges, h.mass, eigenvalues_of(bloch_hamiltonian(model, k)), w);
      for (int j = model.d - 1; j >= 0; --j) {
        if (++c[j] < n) break;
        c[j] = 0;
      }
    }
    h.provenance = "kgrid=" + std::to_string(n) + "^" + std::to_string(model.d);
    return h;
  }

  IVec box = opt.box;
  if (box.empty()) box = IVec(model.d, model.d == 1 ? 512 : 24);
  for (int s = 0; s < opt.samples; ++s) {
    FiniteRealization r = build_bulk(model, box, false, opt.seed + s);
    EigenSystem es = eigensystem(r.dense());
    auto idx = r.interior(r.margin);
    RealVector w(es.dim());
    // interior weight of each eigenvector; masses sum to N exactly
    for (int m = 0; m < es.dim(); ++m) {
      double acc = 0;
      for (int i : idx)
        for (int a = 0; a < r.N; ++a) acc += std::norm(es.vectors(r.row(i, a), m));
      w[m] = acc * double(model.N) / (double(idx.size()) * model.N * opt.samples);
    }
    bin_values(h.edges, h.mass, es.values, w);
  }
  std::string bs;
  for (int j = 0; j < model.d; ++j) bs += (j ? "x" : "") + std::to_string(box[j]);
  h.provenance = "box=" + bs + " samples=" + std::to_string(opt.samples);
  return h;
}

PseudogapFit pseudogap_exponent(const DosHistogram& dos, double E0,
                                double eps_lo, double eps_hi) {
  PseudogapFit fit;
  double bw = dos.bandwidth();
  double binw = bw / dos.bins();
  if (eps_lo <= 0) eps_lo = 4 * binw;
  if (eps_hi <= 0) eps_hi = 0.2 * bw;
  fit.eps_lo = eps_lo;
  fit.eps_hi = eps_hi;
  const int npts = 25;
  std::vector<double> lx, ly;
  int leading_empty = 0;
  bool seen_mass = false;
  for (int i = 0; i < npts; ++i) {
    double eps = eps_lo * std::pow(eps_hi / eps_lo, double(i) / (npts - 1));
    double m = dos.mass_in(E0 - eps, E0 + eps);
    if (m <= 0) {
      if (!seen_mass) ++leading_empty;
      continue;
    }
    seen_mass = true;
    lx.push_back(std::log(eps));
    ly.push_back(std::log(m));
  }
  fit.points = int(lx.size());
  // a pseudogap has mass at every scale; an empty lower window is a gap
  if (fit.points < 4 || leading_empty > npts / 4) {
    fit.gap_detected = true;
    return fit;
  }
  double n = double(lx.size());
  double sx = std::accumulate(lx.begin(), lx.end(), 0.0);
  double sy = std::accumulate(ly.begin(), ly.end(), 0.0);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  double denom = n * sxx - sx * sx;
  fit.gamma = (n * sxy - sx * sy) / denom;
  double a = (sy - fit.gamma * sx) / n;
  double ss = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    double rres = ly[i] - (a + fit.gamma * lx[i]);
    ss += rres * rres;
  }
  fit.stderr_ = std::sqrt(ss / std::max(1.0, n - 2) * n / denom);
  return fit;
}

// ---- sparse solvers ------------------------------------------------------

namespace {

// Lanczos with full reorthogonalization applied to an abstract Hermitian
// operator; returns the extremal Ritz pairs of op.
struct LanczosResult {
  RealVector ritz;
  Matrix vectors;  // Ritz vectors in the original space
};

LanczosResult lanczos(const std::function<Vector(const Vector&)>& op, int n,
                      int steps, uint64_t seed) {
  steps = std::min(steps, n);
  Matrix V(n, steps);
  RealVector alpha(steps), beta(steps);
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = cplx(uniform01(hash_coord(seed, {i, 0})) - 0.5,
                uniform01(hash_coord(seed, {i, 1})) - 0.5);
  }
  v.normalize();
  int m = 0;
  Vector w;
  for (int j = 0; j < steps; ++j) {
    V.col(j) = v;
    w = op(v);
    cplx a = V.col(j).dot(w);
    alpha[j] = a.real();
    w -= a * V.col(j);
    if (j > 0) w -= beta[j - 1] * V.col(j - 1);
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass)
      w -= V.leftCols(j + 1) * (V.leftCols(j + 1).adjoint() * w);
    double b = w.norm();
    m = j + 1;
    if (b < 1e-13) break;
    beta[j] = b;
    v = w / b;
  }
  Matrix T = Matrix::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    T(j, j) = alpha[j];
    if (j + 1 < m) {
      T(j + 1, j) = beta[j];
      T(j, j + 1) = beta[j];
    }
  }
  EigenSystem es = eigensystem(T);
  LanczosResult res;
  res.ritz = es.values;
  res.vectors = V.leftCols(m) * es.vectors;
  return res;
}

}  // namespace

std::vector<InteriorPair> interior_eigs(const SparseMatrix& H, double sigma,
                                        int want, double tol, int max_iter) {
  int n = int(H.rows());
  SparseMatrix A = H;
  for (int i = 0; i < n; ++i) A.coeffRef(i, i) -= sigma;
  A.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw Error("EigensolverFailure", "sparse LU failed (shift hits an eigenvalue?)");
  auto op = [&](const Vector& x) { return Vector(lu.solve(x)); };
  int steps = max_iter > 0 ? max_iter : std::min(n, std::max(80, 4 * want + 40));
  LanczosResult lr = lanczos(op, n, steps, 0x1a2b3c);
  // Ritz values nu of (H-sigma)^{-1}; eigenvalues are sigma + 1/nu
  std::vector<int> order(lr.ritz.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(lr.ritz[a]) > std::abs(lr.ritz[b]);
  });
  std::vector<InteriorPair> out;
  for (int oi : order) {
    if (int(out.size()) >= want) break;
    if (std::abs(lr.ritz[oi]) < 1e-12) continue;
    double lam = sigma + 1.0 / lr.ritz[oi];
    Vector x = lr.vectors.col(oi);
    x.normalize();
    double res = (H * x - lam * x).norm();
    if (res < std::max(tol * 1e3, 1e-7) * std::max(1.0, std::abs(lam)))
      out.push_back({lam, x, res});
  }
  std::sort(out.begin(), out.end(),
            [](auto& a, auto& b) { return std::abs(a.value) < std::abs(b.value); });
  return out;
}

std::vector<InteriorPair> smallest_psd_eigs(const SparseMatrix& A, int want,
                                            double shift, int steps) {
  int n = int(A.rows());
  want = std::min(want, n);
  SparseMatrix M = A;
  for (int i = 0; i < n; ++i) M.coeffRef(i, i) += shift;
  M.makeCompressed();
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower,
                       Eigen::AMDOrdering<SparseMatrix::StorageIndex>>
      llt;
  llt.compute(M);
  if (llt.info() != Eigen::Success)
    throw Error("EigensolverFailure", "sparse Cholesky failed");
  auto op = [&](const Vector& x) { return Vector(llt.solve(x)); };

  if (steps <= 0) steps = std::max(80, 3 * want + 40);
  steps = std::min(steps, n);
  LanczosResult lr = lanczos(op, n, steps, 0xfeed);
  // largest Ritz values of (A+shift)^{-1} = smallest eigenvalues of A
  std::vector<InteriorPair> out;
  for (int i = int(lr.ritz.size()) - 1; i >= 0 && int(out.size()) < want; --i) {
    double nu = lr.ritz[i];
    if (nu <= 0) break;
    double lam = std::max(1.0 / nu - shift, 0.0);
    Vector x = lr.vectors.col(i);
    x.normalize();
    double res = (A * x - lam * x).norm();
    out.push_back({lam, x, res});
  }
  return out;
}

}  // namespace topolat
