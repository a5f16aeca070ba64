#include <doctest.h>

#include "topolat/lattice.hpp"
#include "topolat/spectral.hpp"

using namespace topolat;

TEST_CASE("trace per unit volume normalization") {
  ModelSpec g = preset_graphene();
  FiniteRealization r = build_bulk(g, {6, 6}, false, 0);
  Matrix one = Matrix::Identity(r.dim(), r.dim());
  CHECK(trace_per_volume(r, one, 2).real() == doctest::Approx(2.0).epsilon(1e-12));

  // finite image of u^x, x != 0, is strictly off-diagonal in sites
  Matrix ux = Matrix(magnetic_translation(g, r, {1, 0}));
  CHECK(std::abs(trace_per_volume(r, ux, 2)) < 1e-14);

  // graphene Fermi projection at E_F = 0 on a periodic box: half filling
  FiniteRealization rp = build_bulk(g, {8, 8}, true, 0);
  EigenSystem es = eigensystem(rp.dense());
  Matrix p = fermi_projection(es, 0.0);
  CHECK(trace_per_volume(rp, p, 0).real() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fermi projection basics") {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = -1;
  h(1, 1) = 1;
  EigenSystem es = eigensystem(h);
  Matrix p = fermi_projection(es, 0.0);
  CHECK(std::abs(p(0, 0) - cplx(1, 0)) < 1e-14);
  CHECK(std::abs(p(1, 1)) < 1e-14);
  CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_WITH_AS(fermi_projection(es, 1.0), doctest::Contains("EigenvalueAtFermiLevel"),
                       Error);
}

TEST_CASE("fermi projection rank by eigen count on a periodic graphene box") {
  ModelSpec g = preset_graphene();
  // box size not divisible by 3 so that the discrete k-set avoids the
  // Dirac points
  FiniteRealization r = build_bulk(g, {8, 8}, true, 0);
  EigenSystem es = eigensystem(r.dense());
  Matrix p = fermi_projection(es, 0.0);
  int rank = int(std::lround(p.trace().real()));
  int count = 0;
  for (int i = 0; i < es.dim(); ++i)
    if (es.values[i] <= 0) ++count;
  CHECK(rank == count);
  CHECK(rank == r.n_sites());  // chiral symmetry: half of the eigenvalues
  CHECK((p - p.adjoint()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("approximate sign and indicator") {
  SUBCASE("h = 0 gives 0") {
    Matrix h = Matrix::Zero(3, 3);
    EigenSystem es = eigensystem(h);
    CHECK(approx_sign(es, 0.5).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("arctan(1) = pi/4") {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 1;
    h(1, 1) = -1;
    EigenSystem es = eigensystem(h);
    Matrix s = approx_sign(es, 1.0);
    CHECK(std::abs(s(0, 0) - cplx(0.5, 0)) < 1e-14);
    CHECK(std::abs(s(1, 1) - cplx(-0.5, 0)) < 1e-14);
    Matrix chi = approx_indicator(es, 1.0);
    CHECK(std::abs(chi(1, 1) - cplx(0.75, 0)) < 1e-14);
  }
  SUBCASE("gapped convergence: eps = gap/100 within 2 percent") {
    ModelSpec h3 = preset_honeycomb_lambda(3.0);
    FiniteRealization r = build_bulk(h3, {6, 6}, true, 0);
    EigenSystem es = eigensystem(r.dense());
    double gap = es.values.cwiseAbs().minCoeff();
    Matrix s_eps = approx_sign(es, gap / 100);
    Matrix s = es.apply([](double x) { return x > 0 ? 1.0 : -1.0; });
    // scalar arctan bias bound at the gap edge
    double bias = 1.0 - (2 / pi) * std::atan(100.0);
    CHECK((s_eps - s).cwiseAbs().maxCoeff() < 0.02);
    CHECK((s_eps - s).cwiseAbs().maxCoeff() <= bias + 1e-12);
    // norm bound
    CHECK(singular_values(s_eps)[0] <= 1.0 + 1e-12);
  }
}

TEST_CASE("fermi unitary") {
  SUBCASE("SSH at lambda = 0: u_F(k) = e^{2 pi i k}") {
    ModelSpec ssh = preset_ssh(0.0);
    RealVector k(1);
    for (double kk : {0.1, 0.37, 0.9}) {
      k[0] = kk;
      Matrix u = fermi_unitary_bloch(bloch_hamiltonian(ssh, k));
      CHECK(std::abs(u(0, 0) - std::exp(iu * (2 * pi * kk))) < 1e-12);
    }
  }
  SUBCASE("graphene formula and Dirac-point error") {
    ModelSpec g = preset_graphene();
    RealVector k(1);
    RealVector kk(2);
    kk << 0.2, 0.7;
    Matrix h = bloch_hamiltonian(g, kk);
    Matrix u = fermi_unitary_bloch(h);
    cplx a = h(0, 1);
    CHECK(std::abs(u(0, 0) - a / std::abs(a)) < 1e-12);
    kk << 1.0 / 3, 2.0 / 3;
    CHECK_THROWS_WITH_AS(fermi_unitary_bloch(bloch_hamiltonian(g, kk)),
                         doctest::Contains("KernelPresent"), Error);
  }
  SUBCASE("real-space reconstruction equals sgn(H)") {
    ModelSpec h3 = preset_honeycomb_lambda(3.0);
    FiniteRealization r = build_bulk(h3, {5, 5}, false, 0);
    Matrix u = fermi_unitary_real(r);
    CHECK((u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()))
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    EigenSystem es = eigensystem(r.dense());
    Matrix sgn = es.apply([](double x) { return x > 0 ? 1.0 : -1.0; });
    // embed u back into the grading blocks and compare
    Matrix rec = Matrix::Zero(r.dim(), r.dim());
    std::vector<int> plus, minus;
    for (int i = 0; i < r.n_sites(); ++i) {
      plus.push_back(r.row(i, 0));
      minus.push_back(r.row(i, 1));
    }
    for (size_t a = 0; a < plus.size(); ++a)
      for (size_t b = 0; b < minus.size(); ++b) {
        rec(plus[a], minus[b]) = u(a, b);
        rec(minus[b], plus[a]) = std::conj(u(a, b));
      }
    CHECK((rec - sgn).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("chiral spectral symmetry") {
    ModelSpec g = preset_graphene();
    FiniteRealization r = build_bulk(g, {6, 6}, false, 1);
    RealVector ev = eigenvalues_of(r.dense());
    int n = int(ev.size());
    for (int i = 0; i < n; ++i)
      CHECK(ev[i] == doctest::Approx(-ev[n - 1 - i]).epsilon(1e-9).scale(1));
  }
}

TEST_CASE("dos clean path") {
  SUBCASE("flat band model: single bin with mass N") {
    ModelSpec m(1, 2);
    Matrix t0 = Matrix::Identity(2, 2) * 0.7;
    m.add_hopping({0}, t0);
    DosOptions opt;
    opt.bins = 64;
    opt.kgrid = 16;
    DosHistogram h = dos(m, opt);
    CHECK(h.mass.sum() == doctest::Approx(2.0).epsilon(1e-9));
    int peak = 0;
    for (int b = 0; b < h.bins(); ++b)
      if (h.mass[b] > h.mass[peak]) peak = b;
    CHECK(h.mass[peak] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::abs(0.5 * (h.edges[peak] + h.edges[peak + 1]) - 0.7) <
          h.edges[1] - h.edges[0]);
  }
  SUBCASE("graphene: symmetric, quadratic near zero") {
    ModelSpec g = preset_graphene();
    DosOptions opt;
    opt.kgrid = 240;
    DosHistogram h = dos(g, opt);
    CHECK(h.mass.sum() == doctest::Approx(2.0).epsilon(1e-9));
    // symmetry of the histogram
    for (int b = 0; b < h.bins(); ++b)
      CHECK(h.mass[b] == doctest::Approx(h.mass[h.bins() - 1 - b]).epsilon(0.2).scale(0.01));
    PseudogapFit fit = pseudogap_exponent(h, 0.0);
    CHECK(!fit.gap_detected);
    CHECK(std::abs(fit.gamma - 2.0) < 0.3);
  }
  SUBCASE("semi-Dirac point at lambda = 2: gamma = 1.5") {
    ModelSpec h2 = preset_honeycomb_lambda(2.0);
    DosOptions opt;
    opt.kgrid = 300;
    DosHistogram h = dos(h2, opt);
    PseudogapFit fit = pseudogap_exponent(h, 0.0);
    CHECK(!fit.gap_detected);
    CHECK(std::abs(fit.gamma - 1.5) < 0.3);
  }
  SUBCASE("gap detected at lambda = 3") {
    ModelSpec h3 = preset_honeycomb_lambda(3.0);
    DosOptions opt;
    opt.kgrid = 120;
    DosHistogram h = dos(h3, opt);
    PseudogapFit fit = pseudogap_exponent(h, 0.0);
    CHECK(fit.gap_detected);
  }
}

TEST_CASE("dos disorder path converges to the clean path at W = 0") {
  ModelSpec g = preset_graphene();
  DosOptions clean_opt;
  clean_opt.kgrid = 200;
  clean_opt.bins = 32;
  DosHistogram clean = dos(g, clean_opt);

  ModelSpec gd = g;
  gd.disorder = {DisorderLaw::Kind::uniform_onsite, 0.0};
  gd.chiral = false;
  DosOptions dopt;
  dopt.bins = 32;
  dopt.box = {14, 14};
  dopt.samples = 2;
  DosHistogram dis = dos(gd, dopt);
  CHECK(dis.mass.sum() == doctest::Approx(2.0).epsilon(1e-9));
  for (int b = 0; b < 32; ++b)
    CHECK(std::abs(dis.mass[b] - clean.mass[b]) < 0.08);
}

TEST_CASE("sparse interior eigensolver matches dense near zero") {
  ModelSpec g = preset_graphene();
  FiniteRealization r = build_bulk(g, {10, 10}, false, 0);
  RealVector dense_ev = eigenvalues_of(r.dense());
  std::vector<double> near;
  for (int i = 0; i < dense_ev.size(); ++i)
    if (std::abs(dense_ev[i]) < 0.8) near.push_back(std::abs(dense_ev[i]));
  std::sort(near.begin(), near.end());

  auto pairs = interior_eigs(r.H, 1e-3, 8);
  REQUIRE(pairs.size() >= 4);
  for (size_t i = 0; i < 4; ++i)
    CHECK(std::abs(pairs[i].value) == doctest::Approx(near[i]).epsilon(1e-7).scale(1));
}
