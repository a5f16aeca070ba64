#include "topolat/halfspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace topolat {

CutPlane make_cut(const RealVector& v_raw, double r, int K) {
  CutPlane cut;
  cut.v = Direction::of(v_raw);
  cut.r = r;
  cut.K = K;
  int d = int(cut.v.v.size());
  // enumerate v.x for ||x||_inf <= K; rational iff all positive values are
  // integer multiples of the smallest one
  double lambda = 0;
  std::vector<double> vals;
  IVec x(d, -K);
  while (true) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += cut.v.v[j] * x[j];
    if (s > 1e-9) {
      vals.push_back(s);
      if (lambda == 0 || s < lambda) lambda = s;
    }
    int j = d - 1;
    for (; j >= 0; --j) {
      if (++x[j] <= K) break;
      x[j] = -K;
    }
    if (j < 0) break;
  }
  bool rational = lambda > 0;
  for (double s : vals) {
    double m = s / lambda;
    if (std::abs(m - std::round(m)) > 1e-6) {
      rational = false;
      break;
    }
  }
  if (rational) {
    IVec g(d);
    for (int j = 0; j < d; ++j) {
      double gj = cut.v.v[j] / lambda;
      g[j] = int(std::lround(gj));
      if (std::abs(gj - g[j]) > 1e-6) rational = false;
    }
    if (rational) {
      cut.rational = true;
      cut.g = g;
      cut.lambda_xi = lambda;
      cut.v.integer = g;
    }
  }
  return cut;
}

CutPlane make_cut(const IVec& v_raw, double r) {
  bool zero = true;
  for (int c : v_raw) zero = zero && c == 0;
  if (zero) throw Error("ZeroVector", "cut normal must be nonzero");
  IVec g = v_raw;
  int gg = 0;
  for (int c : g) gg = std::gcd(gg, std::abs(c));
  for (int& c : g) c /= gg;
  CutPlane cut;
  cut.v = Direction::of(g);
  cut.r = r;
  cut.rational = true;
  cut.g = g;
  cut.lambda_xi = 1.0 / norm2(g);
  return cut;
}

double smooth_switch(double t, double eps) {
  if (t <= 0) return 0;
  if (t >= eps) return 1;
  auto f = [](double u) { return u <= 0 ? 0.0 : std::exp(-1.0 / u); };
  double u = t / eps;
  return f(u) / (f(u) + f(1 - u));
}

namespace {

SlabRealization build_slab(const ModelSpec& model, const CutPlane& cut,
                           const SlabOptions& opt, const BoundaryTerm& ktilde,
                           uint64_t seed, double eps_switch) {
  model.validate();
  int d = model.d;
  if (int(cut.v.v.size()) != d)
    throw Error("ValidationError", "cut dimension mismatch");
  SlabRealization slab;
  slab.cut = cut;
  slab.opt = opt;
  slab.hopping_range = model.range();

  int j = 0;
  for (int a = 1; a < d; ++a)
    if (std::abs(cut.v.v[a]) > std::abs(cut.v.v[j])) j = a;
  slab.axis_j = j;
  for (int a = 0; a < d; ++a)
    if (a != j) slab.par_axes.push_back(a);
  double vj = cut.v.v[j];
  slab.W_phys = opt.W * std::abs(vj);

  if (opt.W < 4 * slab.hopping_range)
    throw Error("ValidationError", "slab depth below four hopping ranges");
  if (ktilde.kind != BoundaryTerm::Kind::none && ktilde.strip > opt.W / 2)
    throw Error("BoundaryTermOutOfStrip",
                "boundary term strip exceeds half the slab depth");
  if (opt.parallel_periodic)
    throw Error("ValidationError", "parallel periodic wrap not supported");

  FiniteRealization& r = slab.real;
  r.d = d;
  r.N = model.N;
  r.periodic = false;
  r.seed = seed;
  r.chiral = model.chiral && model.disorder.kind != DisorderLaw::Kind::uniform_onsite;
  r.margin = std::max(1, 2 * slab.hopping_range);

  // enumerate parallel columns, then depth sites within each
  long n_cols = 1;
  for (size_t a = 0; a < slab.par_axes.size(); ++a) n_cols *= opt.L;
  slab.n_columns = n_cols;
  IVec pc(std::max<size_t>(slab.par_axes.size(), 1), 0);
  for (long col = 0; col < n_cols; ++col) {
    double par = 0;
    IVec coord(d, 0);
    for (size_t a = 0; a < slab.par_axes.size(); ++a) {
      coord[slab.par_axes[a]] = pc[a];
      par += cut.v.v[slab.par_axes[a]] * pc[a];
    }
    // v_j x_j in (-r - par, W_phys - r - par]
    double lo = (-cut.r - par), hi = (slab.W_phys - cut.r - par);
    int xlo, xhi;
    if (vj > 0) {
      xlo = int(std::floor(lo / vj + 1e-12)) + 1;
      xhi = int(std::floor(hi / vj + 1e-12));
    } else {
      xlo = int(std::ceil(hi / vj - 1e-12));
      xhi = int(std::ceil(lo / vj - 1e-12)) - 1;
    }
    for (int xj = xlo; xj <= xhi; ++xj) {
      coord[j] = xj;
      double dep = cut.r + par + vj * xj;
      if (dep <= 1e-12 || dep > slab.W_phys + 1e-12) continue;
      slab.depth.push_back(dep);
      slab.column.push_back(col);
      r.site_index[coord] = int(r.sites.size());
      r.sites.push_back(coord);
    }
    for (int a = int(slab.par_axes.size()) - 1; a >= 0; --a) {
      if (++pc[a] < opt.L) break;
      pc[a] = 0;
    }
  }
  if (r.sites.empty()) throw Error("EmptyInterior", "slab retains no sites");

  // sharp restriction P h P: hops with both endpoints retained
  std::vector<Eigen::Triplet<cplx>> trip;
  const int N = model.N;
  auto weight = [&](int site) {
    return eps_switch > 0 ? smooth_switch(slab.depth[site], eps_switch) : 1.0;
  };
  for (int iy = 0; iy < r.n_sites(); ++iy) {
    const IVec& y = r.sites[iy];
    for (auto& [x, t] : model.hoppings) {
      bool zero_disp = norm_inf(x) == 0;
      if (!zero_disp && x < -x) continue;
      auto it = r.site_index.find(y + x);
      if (it == r.site_index.end()) continue;
      int iz = it->second;
      cplx phase = std::exp(iu * translation_phase(model.B, y, x));
      Matrix block = t * phase * (weight(iy) * weight(iz));
      if (model.disorder.kind == DisorderLaw::Kind::uniform_hopping && !zero_disp) {
        IVec bond = y;
        bond.insert(bond.end(), x.begin(), x.end());
        double u = uniform01(hash_coord(seed, bond, 0x51ab));
        block *= (1.0 + model.disorder.strength * (u - 0.5));
      }
      if (zero_disp) {
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b)
            if (block(a, b) != cplx(0))
              trip.emplace_back(r.row(iy, a), r.row(iy, b), block(a, b));
      } else {
        for (int a = 0; a < N; ++a)
          for (int b = 0; b < N; ++b)
            if (block(a, b) != cplx(0)) {
              trip.emplace_back(r.row(iz, a), r.row(iy, b), block(a, b));
              trip.emplace_back(r.row(iy, b), r.row(iz, a), std::conj(block(a, b)));
            }
      }
    }
    if (model.disorder.kind == DisorderLaw::Kind::uniform_onsite) {
      for (int a = 0; a < N; ++a) {
        IVec key = y;
        key.push_back(a);
        double u = uniform01(hash_coord(seed, key, 0xd1a6));
        double v = model.disorder.strength * (u - 0.5) * weight(iy) * weight(iy);
        if (v != 0) trip.emplace_back(r.row(iy, a), r.row(iy, a), cplx(v, 0));
      }
    }
  }

  // boundary term k-tilde on the strip
  if (ktilde.kind == BoundaryTerm::Kind::random_chiral) {
    if (N % 2 != 0)
      throw Error("NonChiralBoundaryTerm",
                  "chiral boundary term needs even orbital count");
    double strip_phys = ktilde.strip * std::abs(vj);
    std::vector<std::pair<int, Matrix>> blocks;
    double max_norm = 0;
    for (int iy = 0; iy < r.n_sites(); ++iy) {
      if (slab.depth[iy] > strip_phys + 1e-12) continue;
      Matrix R(N / 2, N / 2);
      for (int a = 0; a < N / 2; ++a)
        for (int b = 0; b < N / 2; ++b) {
          IVec key = r.sites[iy];
          key.push_back(a * N + b);
          double re = uniform01(hash_coord(ktilde.seed, key, 0xb01)) - 0.5;
          double im = uniform01(hash_coord(ktilde.seed, key, 0xb02)) - 0.5;
          R(a, b) = cplx(re, im);
        }
      max_norm = std::max(max_norm, singular_values(R)[0]);
      blocks.emplace_back(iy, R);
    }
    if (max_norm > 0) {
      double scale = ktilde.strength / max_norm;
      for (auto& [iy, R] : blocks)
        for (int a = 0; a < N / 2; ++a)
          for (int b = 0; b < N / 2; ++b) {
            cplx v = R(a, b) * scale;
            if (v != cplx(0)) {
              trip.emplace_back(r.row(iy, a), r.row(iy, N / 2 + b), v);
              trip.emplace_back(r.row(iy, N / 2 + b), r.row(iy, a), std::conj(v));
            }
          }
    }
  }

  r.H.resize(r.dim(), r.dim());
  r.H.setFromTriplets(trip.begin(), trip.end());
  return slab;
}

}  // namespace

SlabRealization restrict_halfspace(const ModelSpec& model, const CutPlane& cut,
                                   const SlabOptions& opt,
                                   const BoundaryTerm& ktilde, uint64_t seed) {
  return build_slab(model, cut, opt, ktilde, seed, 0.0);
}

SlabRealization smooth_restrict(const ModelSpec& model, const CutPlane& cut,
                                const SlabOptions& opt, double eps_switch,
                                uint64_t seed) {
  return build_slab(model, cut, opt, BoundaryTerm{}, seed, eps_switch);
}

// ---- zero modes ------------------------------------------------------------

namespace {

struct ClusterSplit {
  int size = 0;
  double eps = 0;
  double gap = 0;
  double separation = 0;
  bool warning = false;
};

// largest relative gap in the sorted magnitudes below the window
ClusterSplit find_cluster(const std::vector<double>& sorted, double bw) {
  ClusterSplit cs;
  double window = 0.1 * bw;
  double floor_val = 1e-12 * bw;
  std::vector<double> c;
  for (double v : sorted)
    if (v < window) c.push_back(std::max(v, 0.0));
  if (c.empty()) return cs;
  double best_ratio = 0;
  int best_i = 0;  // cluster size
  double prev = floor_val;
  for (size_t i = 0; i < c.size(); ++i) {
    double ratio = std::max(c[i], 1e-300) / std::max(prev, 1e-300);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best_i = int(i);
      cs.gap = c[i];
      cs.eps = std::sqrt(std::max(prev, 1e-300) * c[i]);
    }
    prev = std::max(c[i], floor_val * 1e-3);
  }
  cs.size = best_i;
  cs.separation = best_ratio;
  cs.warning = cs.size > 0 && best_ratio < 5.0;
  return cs;
}

void fill_mode_geometry(const SlabRealization& slab, ZeroMode& m,
                        const std::vector<double>& site_mass) {
  m.column_mass = RealVector::Zero(slab.n_columns);
  double near = 0, tot = 0;
  for (int i = 0; i < slab.real.n_sites(); ++i) {
    m.column_mass[slab.column[i]] += site_mass[i];
    tot += site_mass[i];
    if (slab.depth[i] <= slab.W_phys / 2) near += site_mass[i];
  }
  m.near_weight = tot > 0 ? near / tot : 0;
}

std::vector<double> bandwidth_probe(const SlabRealization& slab) {
  // Gershgorin-type bound on the spectral radius
  std::vector<double> rowsum(slab.real.dim(), 0.0);
  const SparseMatrix& H = slab.real.H;
  for (int k = 0; k < H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(H, k); it; ++it)
      rowsum[it.row()] += std::abs(it.value());
  return rowsum;
}

ZeroModeReport zero_modes_dense(const SlabRealization& slab, double eps_zero) {
  const FiniteRealization& r = slab.real;
  EigenSystem es = eigensystem(r.dense());
  double bw = es.values[es.dim() - 1] - es.values[0];
  bw = std::max(bw, 1e-12);
  std::vector<int> order(es.dim());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.values[a]) < std::abs(es.values[b]);
  });
  std::vector<double> mags(es.dim());
  for (int i = 0; i < es.dim(); ++i) mags[i] = std::abs(es.values[order[i]]);

  ZeroModeReport rep;
  int csize;
  if (eps_zero >= 0) {
    csize = 0;
    while (csize < es.dim() && mags[csize] <= eps_zero) ++csize;
    rep.eps_zero = eps_zero;
    rep.gap_to_next = csize < es.dim() ? mags[csize] : bw;
    rep.separation = rep.gap_to_next / std::max(mags[std::max(csize - 1, 0)], 1e-300);
    rep.separation_warning = csize > 0 && rep.separation < 5;
  } else {
    ClusterSplit cs = find_cluster(mags, bw);
    csize = cs.size;
    rep.eps_zero = cs.eps;
    rep.gap_to_next = cs.gap;
    rep.separation = cs.separation;
    rep.separation_warning = cs.warning;
  }
  if (csize == 0) return rep;

  Matrix Vc = Matrix(r.dim(), csize);
  for (int i = 0; i < csize; ++i) Vc.col(i) = es.vectors.col(order[i]);
  Matrix modes = Vc;
  RealVector chi(csize);
  if (r.chiral && r.N % 2 == 0) {
    // rotate the cluster into the J eigenbasis so modes carry sharp chirality
    Matrix J = grading_matrix(r);
    Matrix Jc = Vc.adjoint() * J * Vc;
    EigenSystem esJ = eigensystem(Jc);
    modes = Vc * esJ.vectors;
    chi = esJ.values;
  } else {
    Matrix J = grading_matrix(r);
    for (int i = 0; i < csize; ++i)
      chi[i] = (modes.col(i).adjoint() * J * modes.col(i))(0, 0).real();
  }
  Matrix Hd = r.dense();
  for (int i = 0; i < csize; ++i) {
    ZeroMode m;
    m.chirality = chi[i];
    m.value = (Hd * modes.col(i)).norm();
    std::vector<double> mass(r.n_sites(), 0.0);
    for (int s = 0; s < r.n_sites(); ++s)
      for (int a = 0; a < r.N; ++a) mass[s] += std::norm(modes(r.row(s, a), i));
    fill_mode_geometry(slab, m, mass);
    rep.modes.push_back(std::move(m));
  }
  for (auto& m : rep.modes) {
    if (m.near_weight < 0.8) continue;
    if (m.chirality > 0.99)
      ++rep.n_plus;
    else if (m.chirality < -0.99)
      ++rep.n_minus;
  }
  return rep;
}

ZeroModeReport zero_modes_sparse_chiral(const SlabRealization& slab,
                                        double eps_zero) {
  const FiniteRealization& r = slab.real;
  const int N = r.N, half = N / 2;
  std::vector<int> plus_of(r.dim(), -1), minus_of(r.dim(), -1);
  int np = 0, nm = 0;
  for (int s = 0; s < r.n_sites(); ++s)
    for (int a = 0; a < N; ++a)
      if (a < half)
        plus_of[r.row(s, a)] = np++;
      else
        minus_of[r.row(s, a)] = nm++;

  std::vector<Eigen::Triplet<cplx>> trip;
  for (int k = 0; k < r.H.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(r.H, k); it; ++it) {
      int pr = plus_of[it.row()], mc = minus_of[it.col()];
      if (pr >= 0 && mc >= 0) trip.emplace_back(pr, mc, it.value());
    }
  SparseMatrix C(np, nm);
  C.setFromTriplets(trip.begin(), trip.end());

  auto rowsum = bandwidth_probe(slab);
  double bw = 2 * *std::max_element(rowsum.begin(), rowsum.end());
  bw = std::max(bw, 1e-12);
  double shift = std::pow(1e-6 * bw, 2) + 1e-14;

  struct SideMode {
    double s;
    Vector vec;
    double chi;
  };
  std::vector<SideMode> found;
  for (int side = 0; side < 2; ++side) {
    SparseMatrix M = side == 0 ? SparseMatrix((C * SparseMatrix(C.adjoint())).pruned())
                               : SparseMatrix((SparseMatrix(C.adjoint()) * C).pruned());
    int n = int(M.rows());
    int want = std::min<long>(n, std::max<long>(24, slab.n_columns + 16));
    std::vector<InteriorPair> pairs;
    for (int attempt = 0; attempt < 4; ++attempt) {
      pairs = smallest_psd_eigs(M, want, shift);
      // adequate when the window edge or a clear gap is inside the
      // converged prefix
      size_t good = 0;
      while (good < pairs.size() &&
             pairs[good].residual < std::max(1e-9 * bw * bw, 1e-12))
        ++good;
      bool window_covered =
          good > 0 && (good == size_t(n) ||
                       (good < pairs.size() &&
                        std::sqrt(pairs[good - 1].value) > 0.1 * bw));
      if (good >= size_t(want) || window_covered || int(good) >= n) break;
      want = std::min(n, want * 2);
    }
    for (auto& pp : pairs) {
      if (pp.residual > std::max(1e-9 * bw * bw, 1e-12)) break;
      found.push_back({std::sqrt(std::max(pp.value, 0.0)), pp.vector,
                       side == 0 ? 1.0 : -1.0});
    }
  }
  std::sort(found.begin(), found.end(),
            [](const SideMode& a, const SideMode& b) { return a.s < b.s; });

  ZeroModeReport rep;
  std::vector<double> mags;
  for (auto& f : found) mags.push_back(f.s);
  int csize;
  if (eps_zero >= 0) {
    csize = 0;
    while (csize < int(mags.size()) && mags[csize] <= eps_zero) ++csize;
    rep.eps_zero = eps_zero;
    rep.gap_to_next = csize < int(mags.size()) ? mags[csize] : bw;
    rep.separation =
        rep.gap_to_next / std::max(csize > 0 ? mags[csize - 1] : 0.0, 1e-300);
    rep.separation_warning = csize > 0 && rep.separation < 5;
  } else {
    ClusterSplit cs = find_cluster(mags, bw);
    csize = cs.size;
    rep.eps_zero = cs.eps;
    rep.gap_to_next = cs.gap;
    rep.separation = cs.separation;
    rep.separation_warning = cs.warning;
  }
  for (int i = 0; i < csize; ++i) {
    ZeroMode m;
    m.value = found[i].s;
    m.chirality = found[i].chi;
    std::vector<double> mass(r.n_sites(), 0.0);
    bool plus_side = found[i].chi > 0;
    for (int s = 0; s < r.n_sites(); ++s)
      for (int a = 0; a < half; ++a) {
        int rw = plus_side ? plus_of[r.row(s, a)] : minus_of[r.row(s, a + half)];
        mass[s] += std::norm(found[i].vec[rw]);
      }
    fill_mode_geometry(slab, m, mass);
    if (m.near_weight >= 0.8) {
      if (m.chirality > 0)
        ++rep.n_plus;
      else
        ++rep.n_minus;
    }
    rep.modes.push_back(std::move(m));
  }
  return rep;
}

}  // namespace

ZeroModeReport zero_modes(const SlabRealization& slab, double eps_zero) {
  if (slab.chiral() && slab.real.dim() > 2600)
    return zero_modes_sparse_chiral(slab, eps_zero);
  return zero_modes_dense(slab, eps_zero);
}

// ---- densities ---------------------------------------------------------------

namespace {

double signed_interior_mass(const SlabRealization& slab,
                            const ZeroModeReport& report, long* cols_used) {
  int discard = slab.par_axes.empty() ? 0 : slab.hopping_range;
  int L = slab.opt.L;
  auto interior_col = [&](long c) {
    // decompose the flattened column index and test every parallel axis
    for (int a = int(slab.par_axes.size()) - 1; a >= 0; --a) {
      long coord = c % L;
      c /= L;
      if (coord < discard || coord >= L - discard) return false;
    }
    return true;
  };
  long used = 0;
  if (slab.par_axes.empty())
    used = 1;
  else {
    for (long c = 0; c < slab.n_columns; ++c)
      if (interior_col(c)) ++used;
  }
  double mass = 0;
  for (auto& m : report.modes) {
    if (m.near_weight < 0.8) continue;
    if (slab.par_axes.empty())
      mass += m.chirality;
    else
      for (long c = 0; c < slab.n_columns; ++c)
        if (interior_col(c)) mass += m.chirality * m.column_mass[c];
  }
  *cols_used = used;
  return mass;
}

}  // namespace

InvariantResult signed_surface_density(const SlabRealization& slab,
                                       const ZeroModeReport& report) {
  long cols = 0;
  double mass = signed_interior_mass(slab, report, &cols);
  double vj = std::abs(slab.cut.v.v[slab.axis_j]);
  InvariantResult res;
  res.value = vj * mass / double(cols);
  res.error_estimate = vj / double(cols);  // one-mode resolution
  res.path = "column-sum";
  res.params["W"] = std::to_string(slab.opt.W);
  res.params["L"] = std::to_string(slab.opt.L);
  res.params["r"] = std::to_string(slab.cut.r);
  if (report.separation_warning) res.params["warning"] = "SeparationWarning";
  return res;
}

double signed_surface_density_rational(const SlabRealization& slab,
                                       const ZeroModeReport& report) {
  if (!slab.cut.rational)
    throw Error("ValidationError", "rational normalization needs a rational cut");
  long cols = 0;
  double mass = signed_interior_mass(slab, report, &cols);
  double gj = std::abs(double(slab.cut.g[slab.axis_j]));
  return slab.cut.lambda_xi * gj * mass / double(cols);
}

InvariantResult offset_average(const std::function<InvariantResult(double)>& op,
                               const CutPlane& cut,
                               const std::vector<double>& r_samples) {
  if (r_samples.size() < 2)
    throw Error("ValidationError", "offset average needs at least 2 samples");
  std::vector<InvariantResult> rs;
  for (double rr : r_samples) rs.push_back(op(rr));
  InvariantResult res;
  double mean = 0;
  for (auto& rv : rs) mean += rv.value;
  mean /= rs.size();
  double lo = rs[0].value, hi = rs[0].value, err = 0;
  for (auto& rv : rs) {
    lo = std::min(lo, rv.value);
    hi = std::max(hi, rv.value);
    err = std::max(err, rv.error_estimate);
  }
  res.value = mean;
  res.error_estimate = (hi - lo) / 2 + err;
  res.path = rs[0].path + "+offset-avg";
  res.params["offsets"] = std::to_string(rs.size());
  return res;
}

BbcRecord bbc_check(const ModelSpec& model, const CutPlane& cut, int kgrid,
                    const SlabOptions& opt, const BoundaryTerm& ktilde,
                    uint64_t seed, int offsets) {
  BbcRecord rec;
  rec.bulk = winding_number_model(model, cut.v, kgrid);
  auto density_at = [&](double r) {
    CutPlane c2 = cut;
    c2.r = r;
    SlabRealization slab = restrict_halfspace(model, c2, opt, ktilde, seed);
    ZeroModeReport rep = zero_modes(slab);
    return signed_surface_density(slab, rep);
  };
  if (offsets <= 1) {
    rec.edge = density_at(cut.r);
  } else {
    double period = cut.rational ? cut.lambda_xi : 1.0;
    std::vector<double> rs;
    for (int i = 0; i < offsets; ++i)
      rs.push_back(cut.r + period * (i + 0.5) / offsets);
    rec.edge = offset_average(density_at, cut, rs);
  }
  rec.gap = std::abs(rec.bulk.value - rec.edge.value);
  return rec;
}

}  // namespace topolat
