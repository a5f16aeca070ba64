#include "topolat/harmonic.hpp"

#include <algorithm>
#include <cmath>

namespace topolat {

int OperatorProfile::support_radius() const {
  int r = 0;
  for (auto& [x, m] : coeff) r = std::max(r, norm_inf(x));
  return r;
}

void OperatorProfile::set(const IVec& x, const Matrix& m, double var) {
  coeff[x] = m;
  if (var > 0) variance[x] = var;
}

Matrix OperatorProfile::at(const IVec& x) const {
  auto it = coeff.find(x);
  return it == coeff.end() ? Matrix::Zero(N, N) : it->second;
}

void OperatorProfile::prune(double tol) {
  for (auto it = coeff.begin(); it != coeff.end();)
    it = it->second.cwiseAbs().maxCoeff() <= tol ? coeff.erase(it) : std::next(it);
}

OperatorProfile OperatorProfile::adjoint() const {
  OperatorProfile r(d, N);
  for (auto& [x, m] : coeff) r.coeff[-x] = m.adjoint();
  return r;
}

OperatorProfile OperatorProfile::operator*(const OperatorProfile& o) const {
  OperatorProfile r(d, N);
  for (auto& [x, mx] : coeff)
    for (auto& [y, my] : o.coeff) {
      IVec z = x + y;
      auto it = r.coeff.find(z);
      if (it == r.coeff.end())
        r.coeff[z] = mx * my;
      else
        it->second += mx * my;
    }
  r.prune(0.0);
  return r;
}

OperatorProfile OperatorProfile::operator+(const OperatorProfile& o) const {
  OperatorProfile r = *this;
  for (auto& [x, m] : o.coeff) {
    auto it = r.coeff.find(x);
    if (it == r.coeff.end())
      r.coeff[x] = m;
    else
      it->second += m;
  }
  return r;
}

OperatorProfile OperatorProfile::operator-(const OperatorProfile& o) const {
  return *this + o.scaled(-1.0);
}

OperatorProfile OperatorProfile::scaled(cplx s) const {
  OperatorProfile r(d, N);
  for (auto& [x, m] : coeff) r.coeff[x] = s * m;
  return r;
}

OperatorProfile OperatorProfile::identity(int d, int N) {
  OperatorProfile r(d, N);
  r.coeff[IVec(d, 0)] = Matrix::Identity(N, N);
  return r;
}

OperatorProfile OperatorProfile::derive(int axis) const {
  OperatorProfile r(d, N);
  for (auto& [x, m] : coeff)
    if (x[axis] != 0) r.coeff[x] = -iu * double(x[axis]) * m;
  return r;
}

OperatorProfile OperatorProfile::derive_dir(const RealVector& v) const {
  OperatorProfile r(d, N);
  for (auto& [x, m] : coeff) {
    double w = 0;
    for (int j = 0; j < d; ++j) w += v[j] * x[j];
    if (w != 0) r.coeff[x] = -iu * w * m;
  }
  return r;
}

cplx OperatorProfile::trace() const { return at(IVec(d, 0)).trace(); }

Matrix OperatorProfile::symbol(const RealVector& k) const {
  Matrix s = Matrix::Zero(N, N);
  for (auto& [x, m] : coeff) {
    double kx = 0;
    for (int j = 0; j < d; ++j) kx += k[j] * x[j];
    s += m * std::exp(iu * (2 * pi * kx));
  }
  return s;
}

OperatorProfile fourier_profile(const ModelSpec& model,
                                const FiniteRealization& r, const Matrix& op,
                                int margin, int max_range) {
  auto idx = r.interior(margin);
  if (idx.empty()) throw Error("EmptyInterior", "no interior sites for profile");
  OperatorProfile prof(model.d, model.N);
  IVec x(model.d, -max_range);
  while (true) {
    Matrix acc = Matrix::Zero(model.N, model.N);
    Matrix acc2 = Matrix::Zero(model.N, model.N);
    int count = 0;
    for (int iy : idx) {
      IVec z = r.sites[iy] + x;
      auto it = r.site_index.find(z);
      if (it == r.site_index.end()) continue;
      cplx phase = std::exp(-iu * translation_phase(model.B, r.sites[iy], x));
      for (int a = 0; a < model.N; ++a)
        for (int b = 0; b < model.N; ++b) {
          cplx v = op(r.row(it->second, a), r.row(iy, b)) * phase;
          acc(a, b) += v;
          acc2(a, b) += std::norm(v);
        }
      ++count;
    }
    if (count > 0) {
      Matrix mean = acc / double(count);
      double var = 0;
      for (int a = 0; a < model.N; ++a)
        for (int b = 0; b < model.N; ++b)
          var += std::max(0.0, acc2(a, b).real() / count - std::norm(mean(a, b)));
      var /= std::max(1, count - 1) * double(count);  // variance of the mean
      if (mean.cwiseAbs().maxCoeff() > 1e-14 || var > 0)
        prof.set(x, mean, var);
    }
    int j = model.d - 1;
    for (; j >= 0; --j) {
      if (++x[j] <= max_range) break;
      x[j] = -max_range;
    }
    if (j < 0) break;
  }
  prof.prune(1e-14);
  return prof;
}

OperatorProfile profile_of_model(const ModelSpec& model) {
  OperatorProfile prof(model.d, model.N);
  for (auto& [x, t] : model.hoppings) prof.set(x, t);
  return prof;
}

OperatorProfile profile_from_bloch(const ModelSpec& model,
                                   const std::function<Matrix(const Matrix&)>& f,
                                   int ngrid, int max_range, double tol) {
  OperatorProfile prof(model.d, model.N);
  long total = 1;
  for (int j = 0; j < model.d; ++j) total *= ngrid;
  std::vector<Matrix> fk(total);
  RealVector k(model.d);
  IVec c(model.d, 0);
  for (long i = 0; i < total; ++i) {
    for (int j = 0; j < model.d; ++j) k[j] = (c[j] + 0.5) / double(ngrid);
    fk[i] = f(bloch_hamiltonian(model, k));
    for (int j = model.d - 1; j >= 0; --j) {
      if (++c[j] < ngrid) break;
      c[j] = 0;
    }
  }
  IVec x(model.d, -max_range);
  while (true) {
    Matrix acc = Matrix::Zero(model.N, model.N);
    c.assign(model.d, 0);
    for (long i = 0; i < total; ++i) {
      double kx = 0;
      for (int j = 0; j < model.d; ++j) kx += (c[j] + 0.5) / double(ngrid) * x[j];
      acc += fk[i] * std::exp(-iu * (2 * pi * kx));
      for (int j = model.d - 1; j >= 0; --j) {
        if (++c[j] < ngrid) break;
        c[j] = 0;
      }
    }
    acc /= double(total);
    if (acc.cwiseAbs().maxCoeff() > tol) prof.set(x, acc);
    int j = model.d - 1;
    for (; j >= 0; --j) {
      if (++x[j] <= max_range) break;
      x[j] = -max_range;
    }
    if (j < 0) break;
  }
  return prof;
}

// ---- windows ---------------------------------------------------------------

DyadicWindows::DyadicWindows(int jmax_) : jmax(jmax_) {
  if (jmax < 1) throw Error("ValidationError", "jmax must be >= 1");
}

double DyadicWindows::phi(double t) {
  auto raw = [](double u) {
    if (u <= 0.5 || u >= 2.0) return 0.0;
    return std::exp(-1.0 / ((u - 0.5) * (2.0 - u)));
  };
  double v = raw(t);
  if (v == 0.0) return 0.0;
  // normalize so that sum_k phi(2^{-k} t) = 1; at most two terms overlap
  double denom = 0;
  for (int k = -2; k <= 2; ++k) denom += raw(std::ldexp(t, -k));
  return v / denom;
}

double DyadicWindows::weight(int j, double absx) const {
  if (j > 0) return phi(std::ldexp(absx, -j));
  if (absx == 0.0) return 1.0;
  double s = 0;
  int lmax = std::max(1, int(std::ceil(std::log2(absx))) + 2);
  for (int l = 1; l <= lmax; ++l) s += phi(std::ldexp(absx, -l));
  return 1.0 - s;
}

OperatorProfile multiplier_apply(const std::function<double(const IVec&)>& f,
                                 const OperatorProfile& a) {
  OperatorProfile r(a.d, a.N);
  for (auto& [x, m] : a.coeff) {
    double w = f(x);
    if (w != 0.0) r.coeff[x] = w * m;
  }
  return r;
}

OperatorProfile window_apply(const DyadicWindows& w, int j,
                             const OperatorProfile& a) {
  return multiplier_apply([&](const IVec& x) { return w.weight(j, x); }, a);
}

Matrix materialize(const OperatorProfile& a, const IVec& box) {
  long n = 1;
  for (int j = 0; j < a.d; ++j) n *= box[j];
  Matrix M = Matrix::Zero(n * a.N, n * a.N);
  // row-major site indexing over the box
  std::vector<long> stride(a.d, 1);
  for (int j = a.d - 2; j >= 0; --j) stride[j] = stride[j + 1] * box[j + 1];
  IVec c(a.d, 0);
  for (long iy = 0; iy < n; ++iy) {
    for (auto& [x, m] : a.coeff) {
      bool ok = true;
      long iz = 0;
      for (int j = 0; j < a.d; ++j) {
        int t = c[j] + x[j];
        if (t < 0 || t >= box[j]) {
          ok = false;
          break;
        }
        iz += stride[j] * t;
      }
      if (!ok) continue;
      M.block(iz * a.N, iy * a.N, a.N, a.N) += m;
    }
    for (int j = a.d - 1; j >= 0; --j) {
      if (++c[j] < box[j]) break;
      c[j] = 0;
    }
  }
  return M;
}

// ---- norms -----------------------------------------------------------------

namespace {

struct TraceGeom {
  IVec box;
  int margin;
  std::vector<long> interior_rows;  // matrix row blocks of interior sites
};

TraceGeom norm_geometry(const OperatorProfile& a, const NormBox& nb) {
  TraceGeom g;
  int rad = a.support_radius();
  g.margin = nb.margin >= 0 ? nb.margin : rad;
  if (!nb.box.empty())
    g.box = nb.box;
  else
    g.box = IVec(a.d, std::max(3, 4 * rad + 2 * g.margin + 1));
  std::vector<long> stride(a.d, 1);
  for (int j = a.d - 2; j >= 0; --j) stride[j] = stride[j + 1] * g.box[j + 1];
  long n = 1;
  for (int j = 0; j < a.d; ++j) n *= g.box[j];
  IVec c(a.d, 0);
  for (long i = 0; i < n; ++i) {
    bool in = true;
    for (int j = 0; j < a.d; ++j)
      if (c[j] < g.margin || c[j] >= g.box[j] - g.margin) in = false;
    if (in) g.interior_rows.push_back(i);
    for (int j = a.d - 1; j >= 0; --j) {
      if (++c[j] < g.box[j]) break;
      c[j] = 0;
    }
  }
  if (g.interior_rows.empty()) throw Error("EmptyInterior", "norm box too small");
  return g;
}

double interior_lp(const Matrix& M, const TraceGeom& g, int N, double p) {
  if (std::isinf(p)) return singular_values(M)[0];
  // |a|^p through the eigen-decomposition of a^dagger a
  EigenSystem es = eigensystem(Matrix(M.adjoint() * M));
  RealVector powers(es.dim());
  for (int i = 0; i < es.dim(); ++i)
    powers[i] = std::pow(std::max(es.values[i], 0.0), p / 2.0);
  cplx tr = 0;
  for (long site : g.interior_rows)
    for (int aorb = 0; aorb < N; ++aorb) {
      long rw = site * N + aorb;
      cplx dsum = 0;
      for (int m = 0; m < es.dim(); ++m)
        dsum += std::norm(es.vectors(rw, m)) * powers[m];
      tr += dsum;
    }
  double val = tr.real() / double(g.interior_rows.size());
  return std::pow(std::max(val, 0.0), 1.0 / p);
}

}  // namespace

double lp_norm(const OperatorProfile& a, double p, const NormBox& nb) {
  if (p <= 0) throw Error("ValidationError", "p must be positive");
  TraceGeom g = norm_geometry(a, nb);
  Matrix M = materialize(a, g.box);
  return interior_lp(M, g, a.N, p);
}

double lp_norm_matrix(const Matrix& M, double p, const FiniteRealization& geom,
                      int margin) {
  if (std::isinf(p)) return singular_values(M)[0];
  EigenSystem es = eigensystem(Matrix(M.adjoint() * M));
  RealVector powers(es.dim());
  for (int i = 0; i < es.dim(); ++i)
    powers[i] = std::pow(std::max(es.values[i], 0.0), p / 2.0);
  auto idx = geom.interior(margin);
  if (idx.empty()) throw Error("EmptyInterior", "no interior");
  double tr = 0;
  for (int site : idx)
    for (int aorb = 0; aorb < geom.N; ++aorb) {
      long rw = geom.row(site, aorb);
      double dsum = 0;
      for (int m = 0; m < es.dim(); ++m)
        dsum += std::norm(es.vectors(rw, m)) * powers[m];
      tr += dsum;
    }
  return std::pow(tr / double(idx.size()), 1.0 / p);
}

double besov_norm(const OperatorProfile& a, const BesovParams& bp,
                  const NormBox& nb, int jmax) {
  if (bp.s <= 0 || bp.p < 1 || bp.q < 1)
    throw Error("ValidationError", "need s > 0 and p, q >= 1");
  int rad = std::max(1, a.support_radius());
  if (jmax < 1) jmax = std::max(1, int(std::ceil(std::log2(double(rad) * std::sqrt(double(a.d))))) + 1);
  DyadicWindows w(jmax);
  double acc = 0;
  for (int j = 0; j <= jmax; ++j) {
    OperatorProfile block = window_apply(w, j, a);
    if (block.coeff.empty()) continue;
    double np = lp_norm(block, bp.p, nb);
    acc += std::pow(2.0, bp.q * bp.s * j) * std::pow(np, bp.q);
  }
  return std::pow(acc, 1.0 / bp.q);
}

double modulus_of_smoothness(const OperatorProfile& a, double p, int Nsm,
                             double t, const NormBox& nb) {
  // Delta_r acts on coefficients as multiplication by (e^{2 pi i r.x} - 1)^N.
  // The sup over |r| <= t is sampled on axis and diagonal directions with
  // dyadic magnitudes plus the endpoint t.
  std::vector<RealVector> dirs;
  for (int j = 0; j < a.d; ++j) {
    RealVector e = RealVector::Zero(a.d);
    e[j] = 1;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  for (int j = 0; j < a.d; ++j)
    for (int l = j + 1; l < a.d; ++l) {
      RealVector e = RealVector::Zero(a.d);
      e[j] = e[l] = 1.0 / std::sqrt(2.0);
      dirs.push_back(e);
    }
  std::vector<double> mags;
  mags.push_back(t);
  for (double m = 1.0; m > t * 0.51; m *= 0.5)
    if (m <= t) mags.push_back(m);
  double best = 0;
  for (auto& e : dirs)
    for (double m : mags) {
      RealVector r = m * e;
      OperatorProfile diff(a.d, a.N);
      for (auto& [x, mat] : a.coeff) {
        double rx = 0;
        for (int j = 0; j < a.d; ++j) rx += r[j] * x[j];
        cplx f = std::pow(std::exp(iu * (2 * pi * rx)) - 1.0, Nsm);
        if (std::abs(f) > 0) diff.coeff[x] = f * mat;
      }
      if (diff.coeff.empty()) continue;
      best = std::max(best, lp_norm(diff, p, nb));
    }
  return best;
}

double finite_difference_norm(const OperatorProfile& a, double s, double p,
                              double q, int Nsm, int t_per_octave, int octaves,
                              const NormBox& nb) {
  if (Nsm <= s) throw Error("ValidationError", "need Nsm > s");
  double base = lp_norm(a, p, nb);
  // dyadic discretization of the integral over t in (0,1]
  double acc = 0;
  int steps = octaves * t_per_octave;
  double dlog = std::log(2.0) / t_per_octave;
  for (int i = 0; i < steps; ++i) {
    double t = std::pow(2.0, -double(i) / t_per_octave);
    double w = modulus_of_smoothness(a, p, Nsm, t, nb);
    acc += std::pow(t, -s * q) * std::pow(w, q) * dlog;
  }
  return base + std::pow(acc, 1.0 / q);
}

// ---- Hankel ----------------------------------------------------------------

Matrix hankel_operator(const OperatorProfile& a, int L) {
  if (a.d != 1) throw Error("DimensionMismatch", "d = 1 truncation path");
  Matrix H = Matrix::Zero(L * a.N, L * a.N);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      IVec x{i + j + 1};
      auto it = a.coeff.find(x);
      if (it != a.coeff.end()) H.block(i * a.N, j * a.N, a.N, a.N) = it->second;
    }
  return H;
}

Matrix hankel_operator_cut(const OperatorProfile& a, const IVec& box,
                           const RealVector& v, double r) {
  Matrix M = materialize(a, box);
  long n = M.rows() / a.N;
  std::vector<long> stride(a.d, 1);
  for (int j = a.d - 2; j >= 0; --j) stride[j] = stride[j + 1] * box[j + 1];
  // P projects onto v.x + r > 0 (box coordinates)
  std::vector<double> side(n);
  IVec c(a.d, 0);
  for (long i = 0; i < n; ++i) {
    double s = r;
    for (int j = 0; j < a.d; ++j) s += v[j] * c[j];
    side[i] = s > 0 ? 1.0 : 0.0;
    for (int j = a.d - 1; j >= 0; --j) {
      if (++c[j] < box[j]) break;
      c[j] = 0;
    }
  }
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      double w = side[i] * (1.0 - side[j]);
      if (w != 1.0)
        M.block(i * a.N, j * a.N, a.N, a.N) *= w;
    }
  return M;
}

double schatten_norm(const Matrix& a, double p) {
  RealVector s = singular_values(a);
  if (std::isinf(p)) return s[0];
  double acc = 0;
  for (int i = 0; i < s.size(); ++i) acc += std::pow(s[i], p);
  return std::pow(acc, 1.0 / p);
}

PellerReport peller_ratio(const std::vector<OperatorProfile>& symbols, double p,
                          int L, double rel_tol) {
  PellerReport rep;
  rep.L = L;
  for (auto& a : symbols) {
    double hL = schatten_norm(hankel_operator(a, L), p);
    double h2L = schatten_norm(hankel_operator(a, 2 * L), p);
    if (hL > 1e-12 && std::abs(h2L - hL) > rel_tol * std::max(hL, 1e-30))
      throw Error("NonConvergedTruncation",
                  "Hankel Schatten norm changed by more than the tolerance "
                  "between L and 2L");
    double besov = besov_norm(a, {1.0 / p, p, p});
    double ratio = besov > 0 ? h2L / besov : 0.0;
    rep.ratios.push_back(ratio);
    rep.sup = std::max(rep.sup, ratio);
  }
  return rep;
}

}  // namespace topolat
