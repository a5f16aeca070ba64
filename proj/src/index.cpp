#include "topolat/index.hpp"

#include <algorithm>
#include <cmath>

namespace topolat {

namespace {

double trace_power(const Matrix& defect, int m) {
  // defect is Hermitian; sum of eigenvalues^m
  RealVector ev = eigenvalues_of(defect);
  double s = 0;
  for (int i = 0; i < ev.size(); ++i) s += std::pow(ev[i], m);
  return s;
}

}  // namespace

IndexReport fedosov_index(const Matrix& a, int m) {
  int rows = int(a.rows()), cols = int(a.cols());
  Matrix dker = Matrix::Identity(cols, cols) - a.adjoint() * a;
  Matrix dcok = Matrix::Identity(rows, rows) - a * a.adjoint();
  // summability proxy: the defect spectra must not be flat at 1
  double k1 = trace_power(dker, m), c1 = trace_power(dcok, m);
  double k2 = trace_power(dker, m + 1), c2 = trace_power(dcok, m + 1);
  IndexReport rep;
  rep.kernel = k1;
  rep.cokernel = c1;
  rep.index = k1 - c1;
  rep.method = "fedosov";
  rep.parameter = m;
  rep.residual = std::abs((k2 - c2) - (k1 - c1));
  if (rep.residual > 1e-6 * std::max(1.0, std::abs(rep.index)) && m >= 2)
    throw Error("NotSummable", "Fedosov trace not stable in m");
  return rep;
}

IndexReport fedosov_index_pv(const Matrix& a, int m,
                             const FiniteRealization& geom, int margin) {
  int n = int(a.rows());
  Matrix dker = Matrix::Identity(n, n) - a.adjoint() * a;
  Matrix dcok = Matrix::Identity(n, n) - a * a.adjoint();
  Matrix pk = dker, pc = dcok;
  for (int i = 1; i < m; ++i) {
    pk = pk * dker;
    pc = pc * dcok;
  }
  IndexReport rep;
  rep.kernel = trace_per_volume(geom, pk, margin).real();
  rep.cokernel = trace_per_volume(geom, pc, margin).real();
  rep.index = rep.kernel - rep.cokernel;
  rep.method = "fedosov-pv";
  rep.parameter = m;
  return rep;
}

namespace {

int threshold_count(const RealVector& s, double tol, double* sep) {
  int k = 0;
  for (int i = int(s.size()) - 1; i >= 0; --i)
    if (s[i] < tol) ++k;
  double below = 0, above = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s[i] < tol) below = std::max(below, s[i]);
    if (s[i] >= tol && (above == 0 || s[i] < above)) above = s[i];
  }
  *sep = below > 0 ? above / below : (above > 0 ? 1e300 : 1.0);
  return k;
}

int rect_kernel_dim(const OperatorProfile& sym, int L, int bw, double tol,
                    double* sep) {
  // rows [0, L + bw), cols [0, L)
  int N = sym.N;
  Matrix T = Matrix::Zero((L + bw) * N, L * N);
  for (auto& [x, m] : sym.coeff) {
    int disp = x[0];
    for (int col = 0; col < L; ++col) {
      int row = col + disp;
      if (row < 0 || row >= L + bw) continue;
      T.block(row * N, col * N, N, N) = m;
    }
  }
  RealVector s = singular_values(T);
  return threshold_count(s, tol, sep);
}

}  // namespace

IndexReport toeplitz_index(const OperatorProfile& symbol, int L) {
  if (symbol.d != 1) throw Error("DimensionMismatch", "d = 1 symbols only");
  // invertibility on the circle
  double mn = 1e300, mx = 0;
  RealVector k(1);
  for (int i = 0; i < 720; ++i) {
    k[0] = (i + 0.5) / 720.0;
    RealVector s = singular_values(symbol.symbol(k));
    mn = std::min(mn, s[s.size() - 1]);
    mx = std::max(mx, s[0]);
  }
  if (mn <= 1e-6)
    throw Error("SymbolNotInvertible", "symbol has a near-zero singular value");

  int bw = symbol.support_radius();
  double tol = 1e-8 * mx;
  auto count_at = [&](int len, double* ker_sep, double* cok_sep, int* ker,
                      int* cok) {
    *ker = rect_kernel_dim(symbol, len, bw, tol, ker_sep);
    *cok = rect_kernel_dim(symbol.adjoint(), len, bw, tol, cok_sep);
  };
  int ker1, cok1, ker2, cok2;
  double s1, s2, s3, s4;
  count_at(L, &s1, &s2, &ker1, &cok1);
  count_at(2 * L, &s3, &s4, &ker2, &cok2);
  if (ker1 - cok1 != ker2 - cok2)
    throw Error("NonConvergedTruncation", "index differs between L and 2L");
  if (std::min({s1, s2, s3, s4}) < 100)
    throw Error("NonConvergedTruncation",
                "kernel threshold lacks a factor-100 separation");
  IndexReport rep;
  rep.kernel = ker1;
  rep.cokernel = cok1;
  rep.index = ker1 - cok1;
  rep.method = "kernel-count";
  rep.parameter = L;
  rep.residual = 0;
  return rep;
}

IndexReport half_line_index(const Matrix& u, int cut, int K, double tol) {
  int n = int(u.rows());
  if (cut + K > n) throw Error("DimensionMismatch", "cut + K exceeds the chain");
  // rows: everything on the half line x >= cut; cols: [cut, cut + K)
  Matrix T = u.block(cut, cut, n - cut, K);
  Matrix Ta = u.adjoint().block(cut, cut, n - cut, K);
  double scale = std::max(singular_values(u)[0], 1e-30);
  double sk, sc;
  RealVector s1 = singular_values(T), s2 = singular_values(Ta);
  int ker = threshold_count(s1, tol * scale, &sk);
  int cok = threshold_count(s2, tol * scale, &sc);
  IndexReport rep;
  rep.kernel = ker;
  rep.cokernel = cok;
  rep.index = ker - cok;
  rep.method = "kernel-count";
  rep.parameter = K;
  rep.residual = 1.0 / std::min(sk, sc);
  return rep;
}

SobolevCheck sobolev_index_check(const ModelSpec& model, int kgrid, int L) {
  if (model.d != 1) throw Error("DimensionMismatch", "d = 1 check");
  if (!model.chiral) throw Error("NotChiral", "chiral model required");
  SobolevCheck chk;
  chk.winding =
      winding_number_model(model, Direction::axis(1, 0), kgrid).value;
  OperatorProfile uf = profile_from_bloch(
      model,
      [&](const Matrix& h) {
        return fermi_unitary_bloch(h);
      },
      512, 40, 1e-13);
  chk.index = toeplitz_index(uf, L).index;
  chk.residual = std::abs(chk.winding + chk.index);
  return chk;
}

DisorderedIndexStats disordered_chain_index(const ModelSpec& model, int chain,
                                            int seeds, uint64_t seed0,
                                            int kgrid) {
  if (model.d != 1 || !model.chiral)
    throw Error("NotChiral", "disordered index needs a chiral chain");
  ModelSpec clean = model;
  clean.disorder = DisorderLaw{};
  DisorderedIndexStats st;
  st.clean_winding =
      winding_number_model(clean, Direction::axis(1, 0), kgrid).value;
  st.seeds = seeds;
  std::vector<double> vals;
  for (int s = 0; s < seeds; ++s) {
    FiniteRealization r =
        build_bulk(model, IVec{chain}, true, seed0 + s);
    Matrix u = fermi_unitary_real(r);
    int cut = chain / 2;
    int K = chain - cut - 24;  // keep a decay margin before the wrap corner
    IndexReport rep = half_line_index(u, cut, K);
    vals.push_back(rep.index);
  }
  double mean = 0;
  for (double v : vals) mean += v;
  mean /= vals.size();
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= std::max<size_t>(1, vals.size() - 1);
  st.mean = mean;
  st.sigma = std::sqrt(var / vals.size());
  return st;
}

}  // namespace topolat
