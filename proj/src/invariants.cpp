#include "topolat/invariants.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

namespace topolat {

Direction Direction::axis(int d, int j) {
  RealVector v = RealVector::Zero(d);
  v[j] = 1;
  Direction dir;
  dir.v = v;
  IVec g(d, 0);
  g[j] = 1;
  dir.integer = g;
  return dir;
}

Direction Direction::of(const RealVector& raw) {
  double n = raw.norm();
  if (n < 1e-14) throw Error("ZeroVector", "direction must be nonzero");
  Direction dir;
  dir.v = raw / n;
  return dir;
}

Direction Direction::of(const IVec& raw) {
  RealVector v(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) v[i] = raw[i];
  Direction dir = of(v);
  IVec g = raw;
  int gg = 0;
  for (int c : g) gg = std::gcd(gg, std::abs(c));
  if (gg > 1)
    for (int& c : g) c /= gg;
  dir.integer = g;
  return dir;
}

cplx chern_constant(int n) {
  if (n % 2 == 0) {
    int k = n / 2;
    cplx c = 1;
    for (int i = 0; i < k; ++i) c *= 2 * pi * iu;
    double fact = 1;
    for (int i = 2; i <= k; ++i) fact *= i;
    return c / fact;
  }
  int k = (n - 1) / 2;
  cplx c = iu;
  for (int i = 0; i < k; ++i) c *= pi * iu;
  double dfact = 1;
  for (int i = 2 * k + 1; i > 1; i -= 2) dfact *= i;
  return c / dfact;
}

BlochMap make_bloch(const ModelSpec& model) {
  BlochMap bm;
  bm.d = model.d;
  bm.dim = model.N;
  bm.trace_factor = 1;
  ModelSpec m = model;
  bm.h = [m](const RealVector& k) { return bloch_hamiltonian(m, k); };
  bm.dh = [m](const RealVector& k, int axis) {
    Matrix d = Matrix::Zero(m.N, m.N);
    for (auto& [x, t] : m.hoppings) {
      double kx = 0;
      for (int j = 0; j < m.d; ++j) kx += k[j] * x[j];
      d += t * (2 * pi * iu * double(x[axis])) * std::exp(iu * (2 * pi * kx));
    }
    return d;
  };
  return bm;
}

BlochMap make_magnetic_bloch_map(const ModelSpec& model, int q) {
  BlochMap bm;
  bm.d = 2;
  bm.dim = q * model.N;
  bm.trace_factor = 1.0 / q;
  ModelSpec m = model;
  bm.h = [m, q](const RealVector& k) { return magnetic_bloch(m, q, k); };
  bm.dh = [m, q](const RealVector& k, int axis) {
    const int N = m.N;
    double b = m.B(1, 0);
    Matrix D = Matrix::Zero(q * N, q * N);
    for (auto& [x, t] : m.hoppings) {
      cplx bloch = std::exp(iu * (2 * pi * (k[0] * x[0] + k[1] * x[1]))) *
                   (2 * pi * iu * double(x[axis]));
      for (int mm = 0; mm < q; ++mm) {
        int mp = ((mm + x[0]) % q + q) % q;
        D.block(mp * N, mm * N, N, N) += t * std::exp(iu * (b * x[1] * mm)) * bloch;
      }
    }
    return D;
  };
  return bm;
}

// ---- winding ----------------------------------------------------------------

namespace {

double slice_winding(const std::function<Matrix(const RealVector&)>& u, int d,
                     int axis, RealVector base, int n) {
  // winding of det u along k_axis in [0,1), nodes shifted half a spacing
  double total = 0;
  cplx prev = 0, first = 0;
  for (int i = 0; i < n; ++i) {
    base[axis] = (i + 0.5) / n;
    cplx det = u(base).determinant();
    if (i == 0)
      first = det;
    else
      total += std::arg(det / prev);
    prev = det;
  }
  total += std::arg(first / prev);
  return total / (2 * pi);
}

}  // namespace

InvariantResult winding_number_kspace(
    const std::function<Matrix(const RealVector&)>& u, int d,
    const Direction& v, int ngrid) {
  // unitarity spot check
  RealVector probe = RealVector::Constant(d, 0.37);
  Matrix up = u(probe);
  if ((up.adjoint() * up - Matrix::Identity(up.rows(), up.cols()))
          .cwiseAbs()
          .maxCoeff() > 1e-8)
    throw Error("NonUnitaryInput", "u is not unitary at a probe point");

  auto eval = [&](int n) {
    double acc = 0;
    for (int axis = 0; axis < d; ++axis) {
      if (std::abs(v.v[axis]) < 1e-14) continue;
      // average the line winding over the transverse grid
      long lines = 1;
      for (int j = 0; j < d; ++j)
        if (j != axis) lines *= n;
      double axis_acc = 0;
      IVec c(d, 0);
      for (long li = 0; li < lines; ++li) {
        RealVector base(d);
        int ci = 0;
        for (int j = 0; j < d; ++j)
          base[j] = j == axis ? 0.0 : (c[ci++] + 0.5) / n;
        axis_acc += slice_winding(u, d, axis, base, n);
        for (int j = d - 2; j >= 0; --j) {
          if (++c[j] < n) break;
          c[j] = 0;
        }
        if (d == 1) break;
      }
      acc += v.v[axis] * axis_acc / double(lines);
    }
    return acc;
  };

  InvariantResult res;
  double fine = eval(ngrid);
  double coarse = eval(std::max(8, ngrid / 2));
  res.value = fine;
  res.error_estimate = std::abs(fine - coarse);
  res.path = "kspace";
  res.params["kgrid"] = std::to_string(ngrid);
  return res;
}

InvariantResult winding_number_model(const ModelSpec& model, const Direction& v,
                                     int ngrid) {
  if (!model.chiral) throw Error("NotChiral", "winding needs a chiral model");
  ModelSpec m = model;
  auto u = [m](const RealVector& k) {
    return fermi_unitary_bloch(bloch_hamiltonian(m, k));
  };
  return winding_number_kspace(u, model.d, v, ngrid);
}

InvariantResult winding_number_real(const ModelSpec& model, const Direction& v,
                                    int L, int margin) {
  FiniteRealization r = build_bulk(model, IVec(model.d, L), false, 0);
  Matrix u = fermi_unitary_real(r);
  // plus-orbital row -> site number
  std::vector<int> site_of(r.dim() / 2);
  {
    int idx = 0;
    for (int i = 0; i < r.n_sites(); ++i)
      for (int a = 0; a < r.N / 2; ++a) site_of[idx++] = i;
  }
  auto interior = r.interior(margin);
  std::vector<char> is_interior(r.n_sites(), 0);
  for (int i : interior) is_interior[i] = 1;

  InvariantResult res;
  res.path = "realspace";
  res.params["L"] = std::to_string(L);
  res.params["margin"] = std::to_string(margin);
  cplx val = 0;
  int half = int(u.rows());
  for (int axis = 0; axis < model.d; ++axis) {
    if (std::abs(v.v[axis]) < 1e-14) continue;
    // [X_axis, u](r,c) = (x_r - x_c) u(r,c); value = T(u^dagger [X, u])
    cplx tr = 0;
    long used = 0;
    for (int c = 0; c < half; ++c) {
      if (!is_interior[site_of[c]]) continue;
      cplx diag = 0;
      for (int rw = 0; rw < half; ++rw) {
        double dx = r.sites[site_of[rw]][axis] - r.sites[site_of[c]][axis];
        if (dx != 0) diag += std::conj(u(rw, c)) * dx * u(rw, c);
      }
      tr += diag;
      ++used;
    }
    long interior_sites = used / (r.N / 2);
    val += v.v[axis] * tr / double(interior_sites);
  }
  if (std::abs(val.imag()) > 1e-6)
    throw Error("NonUnitaryInput", "winding trace has large imaginary part");
  res.value = val.real();
  res.error_estimate = std::abs(val.imag()) + 1.0 / (L * L);
  return res;
}

InvariantResult odd_chern(const OperatorProfile& u,
                          const std::vector<Direction>& frame, int ngrid) {
  int n = int(frame.size());
  if (n % 2 == 0) throw Error("DimensionMismatch", "odd pairing needs odd n");
  if (n > u.d) throw Error("DimensionMismatch", "n exceeds the dimension");
  if (n == 1) {
    // same formula; evaluate through the winding path on the symbol
    ModelSpec dummy(u.d, u.N);
    OperatorProfile uu = u;
    auto sym = [uu](const RealVector& k) { return uu.symbol(k); };
    return winding_number_kspace(sym, u.d, frame[0], ngrid > 0 ? ngrid : 120);
  }
  OperatorProfile ustar = u.adjoint();
  OperatorProfile one = OperatorProfile::identity(u.d, u.N);
  std::vector<OperatorProfile> args;  // (u*-1, u-1, ..., u*-1, u-1), n+1 entries
  for (int i = 0; i <= n; ++i) args.push_back(i % 2 == 0 ? ustar - one : u - one);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  cplx acc = 0;
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    double sign = inversions % 2 == 0 ? 1.0 : -1.0;
    OperatorProfile prod = args[0];
    for (int i = 1; i <= n; ++i)
      prod = prod * args[i].derive_dir(frame[perm[i - 1]].v);
    acc += sign * prod.trace();
  } while (std::next_permutation(perm.begin(), perm.end()));
  InvariantResult res;
  cplx val = chern_constant(n) * acc;
  res.value = val.real();
  res.error_estimate = std::abs(val.imag());
  res.path = "profile";
  res.params["n"] = std::to_string(n);
  return res;
}

// ---- even ---------------------------------------------------------------

namespace {

Matrix dP(const EigenSystem& es, const Matrix& dH, int nocc) {
  int dim = es.dim();
  Matrix Vo = es.vectors.leftCols(nocc);
  Matrix Ve = es.vectors.rightCols(dim - nocc);
  Matrix G = Ve.adjoint() * dH * Vo;  // (dim-nocc) x nocc
  for (int c = 0; c < nocc; ++c)
    for (int rw = 0; rw < dim - nocc; ++rw)
      G(rw, c) /= es.values[c] - es.values[nocc + rw];
  Matrix M = Ve * G * Vo.adjoint();
  return M + M.adjoint();
}

}  // namespace

InvariantResult even_chern_kspace(const BlochMap& bm, double E_F,
                                  const Direction& a, const Direction& b,
                                  int ngrid) {
  auto eval = [&](int n) {
    cplx acc = 0;
    RealVector k(bm.d);
    IVec c(bm.d, 0);
    long total = 1;
    for (int j = 0; j < bm.d; ++j) total *= n;
    for (long i = 0; i < total; ++i) {
      for (int j = 0; j < bm.d; ++j) k[j] = (c[j] + 0.5) / n;
      Matrix H = bm.h(k);
      EigenSystem es = eigensystem(H);
      int nocc = 0;
      while (nocc < es.dim() && es.values[nocc] <= E_F) ++nocc;
      if (nocc == 0 || nocc == es.dim())
        throw Error("NotAProjection", "no occupied/empty split at this k");
      Matrix p = es.vectors.leftCols(nocc) * es.vectors.leftCols(nocc).adjoint();
      Matrix da = Matrix::Zero(es.dim(), es.dim());
      Matrix db = Matrix::Zero(es.dim(), es.dim());
      for (int j = 0; j < bm.d; ++j) {
        if (std::abs(a.v[j]) > 1e-14) da += a.v[j] * dP(es, bm.dh(k, j), nocc);
        if (std::abs(b.v[j]) > 1e-14) db += b.v[j] * dP(es, bm.dh(k, j), nocc);
      }
      // nabla = -(1/2pi) d/dk
      cplx term = (p * da * db - p * db * da).trace() / (4 * pi * pi);
      acc += term;
      for (int j = bm.d - 1; j >= 0; --j) {
        if (++c[j] < n) break;
        c[j] = 0;
      }
    }
    cplx val = chern_constant(2) * bm.trace_factor * acc / double(total);
    return val;
  };
  cplx fine = eval(ngrid);
  cplx coarse = eval(std::max(6, ngrid / 2));
  InvariantResult res;
  res.value = fine.real();
  res.error_estimate = std::abs(fine - coarse) + std::abs(fine.imag());
  res.path = "kspace";
  res.params["kgrid"] = std::to_string(ngrid);
  return res;
}

InvariantResult even_chern_real(const Matrix& p, const FiniteRealization& geom,
                                const Direction& a, const Direction& b,
                                int margin) {
  if ((p * p - p).cwiseAbs().maxCoeff() > 1e-8)
    throw Error("NotAProjection", "input is not idempotent");
  int dim = int(p.rows());
  RealVector xa(dim), xb(dim);
  for (int i = 0; i < geom.n_sites(); ++i)
    for (int orb = 0; orb < geom.N; ++orb) {
      double pa = 0, pb = 0;
      for (int j = 0; j < geom.d; ++j) {
        pa += a.v[j] * geom.sites[i][j];
        pb += b.v[j] * geom.sites[i][j];
      }
      xa[geom.row(i, orb)] = pa;
      xb[geom.row(i, orb)] = pb;
    }
  // nabla_a p = -i [X_a, p]
  Matrix da(dim, dim), db(dim, dim);
  for (int c = 0; c < dim; ++c)
    for (int rw = 0; rw < dim; ++rw) {
      da(rw, c) = -iu * (xa[rw] - xa[c]) * p(rw, c);
      db(rw, c) = -iu * (xb[rw] - xb[c]) * p(rw, c);
    }
  Matrix comm = p * (da * db - db * da);
  cplx tr = trace_per_volume(geom, comm, margin);
  cplx val = chern_constant(2) * tr;
  InvariantResult res;
  res.value = val.real();
  res.error_estimate = std::abs(val.imag());
  res.path = "realspace";
  res.params["margin"] = std::to_string(margin);
  return res;
}

std::vector<SweepRow> weak_invariant_sweep(
    const std::function<InvariantResult(double)>& op, double lo, double hi,
    double step, int threads) {
  int count = int(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<SweepRow> rows(count);
  auto work = [&](int begin, int stride) {
    for (int i = begin; i < count; i += stride) {
      double x = lo + i * step;
      rows[i].parameter = x;
      try {
        InvariantResult r = op(x);
        rows[i].value = r.value;
        rows[i].error = r.error_estimate;
        rows[i].status = "ok";
      } catch (const Error& e) {
        rows[i].value = 0;
        rows[i].error = 0;
        rows[i].status = e.code();
      }
    }
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return rows;
}

}  // namespace topolat
