#include "support/oracles.hpp"

#include "topolat/spectral.hpp"

namespace topolat::oracle {

double fukui_hatsugai_chern(const BlochMap& bm, double E_F, int n) {
  // occupied frames on the grid
  std::vector<Matrix> frames(n * n);
  std::vector<int> nocc(n * n);
  RealVector k(2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      k[0] = (i + 0.5) / n;
      k[1] = (j + 0.5) / n;
      EigenSystem es = eigensystem(bm.h(k));
      int m = 0;
      while (m < es.dim() && es.values[m] <= E_F) ++m;
      frames[i * n + j] = es.vectors.leftCols(m);
      nocc[i * n + j] = m;
    }
  auto link = [&](int a, int b) {
    return (frames[a].adjoint() * frames[b]).determinant();
  };
  double total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int a = i * n + j;
      int b = ((i + 1) % n) * n + j;
      int c = ((i + 1) % n) * n + (j + 1) % n;
      int d = i * n + (j + 1) % n;
      cplx u = link(a, b) * link(b, c) * link(c, d) * link(d, a);
      total += std::arg(u);
    }
  return bm.trace_factor * total / (2 * pi);
}

double honeycomb_winding_formula(double lambda) {
  if (std::abs(lambda) >= 2.0) return 0.0;
  return 1.0 - std::acos(-lambda / 2.0) / pi;
}

OperatorProfile random_profile(int d, int N, int range, uint64_t seed) {
  OperatorProfile p(d, N);
  IVec x(d, -range);
  while (true) {
    Matrix m(N, N);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) {
        IVec key = x;
        key.push_back(a * N + b);
        m(a, b) = cplx(uniform01(hash_coord(seed, key, 0x11)) - 0.5,
                       uniform01(hash_coord(seed, key, 0x22)) - 0.5);
      }
    p.set(x, m);
    int j = d - 1;
    for (; j >= 0; --j) {
      if (++x[j] <= range) break;
      x[j] = -range;
    }
    if (j < 0) break;
  }
  return p;
}

OperatorProfile random_hermitian_profile(int d, int N, int range,
                                         uint64_t seed) {
  OperatorProfile raw = random_profile(d, N, range, seed);
  OperatorProfile sym = raw + raw.adjoint();
  return sym.scaled(0.5);
}

Matrix random_partial_isometry(int rank, int ker, int coker, uint64_t seed) {
  // a = U S V* of size (rank+coker) x (rank+ker) with `rank` unit singular
  // values; then dim ker a = ker and dim ker a* = coker exactly.
  int rows = rank + coker, cols = rank + ker;
  auto haar_unitary = [&](int n, uint64_t tag) {
    Matrix g(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        g(a, b) = cplx(uniform01(hash_coord(seed, {a, b}, tag)) - 0.5,
                       uniform01(hash_coord(seed, {a, b}, tag + 1)) - 0.5);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    return q;
  };
  Matrix S = Matrix::Zero(rows, cols);
  for (int i = 0; i < rank; ++i) S(i, i) = 1;
  return haar_unitary(rows, 0xaa) * S * haar_unitary(cols, 0xcc).adjoint();
}

}  // namespace topolat::oracle
