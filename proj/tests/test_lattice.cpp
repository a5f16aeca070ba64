#include <doctest.h>

#include "topolat/lattice.hpp"
#include "topolat/spectral.hpp"

using namespace topolat;

TEST_CASE("graphene bulk box is the hexagon adjacency matrix") {
  ModelSpec g = preset_graphene();
  FiniteRealization r = build_bulk(g, {4, 4}, false, 0);
  CHECK(r.dim() == 32);
  Matrix H = r.dense();
  CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  // every entry is 0 or 1 and rows touch at most 3 neighbors
  int nonzero = 0;
  for (int i = 0; i < 32; ++i) {
    int row_nnz = 0;
    for (int j = 0; j < 32; ++j) {
      double a = std::abs(H(i, j));
      CHECK((a < 1e-14 || std::abs(a - 1.0) < 1e-14));
      if (a > 0.5) ++row_nnz;
    }
    CHECK(row_nnz <= 3);
    nonzero += row_nnz;
  }
  CHECK(nonzero > 0);
}

TEST_CASE("on-site identity model materializes as the identity") {
  ModelSpec m(2, 3);
  m.add_hopping({0, 0}, Matrix::Identity(3, 3));
  FiniteRealization r = build_bulk(m, {3, 3}, false, 1);
  CHECK((r.dense() - Matrix::Identity(27, 27)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("magnetic translations satisfy u1 u2 = exp(i B12) u2 u1") {
  ModelSpec m(2, 1);
  m.add_hopping({0, 0}, Matrix::Identity(1, 1));
  m.B = RealMatrix::Zero(2, 2);
  m.B(0, 1) = 2 * pi / 3;
  m.B(1, 0) = -2 * pi / 3;
  FiniteRealization r = build_bulk(m, {7, 7}, false, 0);
  Matrix u1 = Matrix(magnetic_translation(m, r, {1, 0}));
  Matrix u2 = Matrix(magnetic_translation(m, r, {0, 1}));
  Matrix lhs = u1 * u2;
  Matrix rhs = std::exp(iu * m.B(0, 1)) * u2 * u1;
  // compare on the interior block where both shifts act
  double dev = 0;
  for (int i : r.interior(2))
    for (int j : r.interior(2)) dev = std::max(dev, std::abs(lhs(i, j) - rhs(i, j)));
  CHECK(dev < 1e-12);
}

TEST_CASE("plaquette path composition gives the flux phase") {
  ModelSpec m(2, 1);
  m.add_hopping({0, 0}, Matrix::Identity(1, 1));
  m.B = RealMatrix::Zero(2, 2);
  m.B(0, 1) = pi;
  m.B(1, 0) = -pi;
  FiniteRealization r = build_bulk(m, {6, 6}, false, 0);
  Matrix ue1 = Matrix(magnetic_translation(m, r, {1, 0}));
  Matrix ue2 = Matrix(magnetic_translation(m, r, {0, 1}));
  // path e1, e2, -e1, -e2 applied in order
  Matrix loop = ue2.adjoint() * ue1.adjoint() * ue2 * ue1;
  // scalar phase e^{-i B12} = -1 at B12 = pi on the interior
  for (int i : r.interior(2)) CHECK(std::abs(loop(i, i) - cplx(-1, 0)) < 1e-12);
}

TEST_CASE("identity translation and plain shift") {
  ModelSpec m(2, 1);
  m.add_hopping({0, 0}, Matrix::Identity(1, 1));
  FiniteRealization r = build_bulk(m, {5, 5}, false, 0);
  Matrix id = Matrix(magnetic_translation(m, r, {0, 0}));
  CHECK((id - Matrix::Identity(25, 25)).cwiseAbs().maxCoeff() == 0.0);
  Matrix s = Matrix(magnetic_translation(m, r, {1, 0}));
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 5; ++y) {
      int from = r.site_index.at({x, y});
      int to = r.site_index.at({x + 1, y});
      CHECK(std::abs(s(to, from) - cplx(1, 0)) < 1e-14);
    }
}

TEST_CASE("bloch hamiltonian of graphene") {
  ModelSpec g = preset_graphene();
  RealVector k(2);

  SUBCASE("vanishes at the Dirac point (1/3, 2/3)") {
    k << 1.0 / 3, 2.0 / 3;
    Matrix h = bloch_hamiltonian(g, k);
    RealVector ev = eigenvalues_of(h);
    CHECK(std::abs(ev[0]) < 1e-12);
    CHECK(std::abs(ev[1]) < 1e-12);
  }
  SUBCASE("a(0,0) = 3") {
    k << 0, 0;
    Matrix h = bloch_hamiltonian(g, k);
    CHECK(std::abs(h(0, 1) - cplx(3, 0)) < 1e-14);
    RealVector ev = eigenvalues_of(h);
    CHECK(ev[0] == doctest::Approx(-3).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(3).epsilon(1e-12));
  }
  SUBCASE("lambda = 3 is gapped: min |a(k)| >= 1") {
    ModelSpec h3 = preset_honeycomb_lambda(3.0);
    double mn = 1e300;
    for (int i = 0; i < 64; ++i)
      for (int j = 0; j < 64; ++j) {
        k << (i + 0.5) / 64, (j + 0.5) / 64;
        mn = std::min(mn, std::abs(bloch_hamiltonian(h3, k)(0, 1)));
      }
    CHECK(mn >= 1.0 - 1e-9);
  }
  SUBCASE("rejects magnetic or disordered models") {
    ModelSpec harper = preset_harper(1, 3);
    k << 0.1, 0.2;
    CHECK_THROWS_AS(bloch_hamiltonian(harper, k), Error);
    ModelSpec dis = preset_graphene();
    dis.disorder = {DisorderLaw::Kind::uniform_onsite, 0.5};
    CHECK_THROWS_AS(bloch_hamiltonian(dis, k), Error);
  }
}

TEST_CASE("flux quantization on interior plaquettes") {
  ModelSpec m = preset_harper(1, 4);
  FiniteRealization r = build_bulk(m, {8, 8}, false, 3);
  Matrix H = r.dense();
  // loop (+e2, +e1, -e2, -e1) accumulates e^{i B12}
  for (int x = 2; x < 5; ++x)
    for (int y = 2; y < 5; ++y) {
      int s00 = r.site_index.at({x, y});
      int s01 = r.site_index.at({x, y + 1});
      int s11 = r.site_index.at({x + 1, y + 1});
      int s10 = r.site_index.at({x + 1, y});
      cplx prod = H(s01, s00) * H(s11, s01) * H(s10, s11) * H(s00, s10);
      CHECK(std::abs(prod - std::exp(iu * m.B(0, 1))) < 1e-12);
    }
}

TEST_CASE("periodic flux commensurability is enforced") {
  ModelSpec m = preset_harper(1, 3);
  CHECK_THROWS_WITH_AS(build_bulk(m, {8, 9}, true, 0).dim(),
                       doctest::Contains("IncommensurateFlux"), Error);
  CHECK_NOTHROW(build_bulk(m, {9, 9}, true, 0));
}

TEST_CASE("box must exceed twice the hopping range") {
  ModelSpec g = preset_graphene();
  CHECK_THROWS_WITH_AS(build_bulk(g, {2, 2}, false, 0).dim(),
                       doctest::Contains("RangeTooLarge"), Error);
}

TEST_CASE("chirality of built matrices") {
  ModelSpec g = preset_graphene();
  FiniteRealization r = build_bulk(g, {5, 5}, false, 0);
  Matrix J = grading_matrix(r);
  Matrix H = r.dense();
  CHECK((J * H * J + H).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("determinism and covariance of disorder") {
  ModelSpec g = preset_graphene();
  g.disorder = {DisorderLaw::Kind::uniform_onsite, 1.0};
  g.chiral = false;  // on-site disorder breaks the grading
  FiniteRealization a = build_bulk(g, {5, 5}, false, 42);
  FiniteRealization b = build_bulk(g, {5, 5}, false, 42);
  CHECK((a.dense() - b.dense()).cwiseAbs().maxCoeff() == 0.0);
  FiniteRealization c = build_bulk(g, {5, 5}, false, 43);
  CHECK((a.dense() - c.dense()).cwiseAbs().maxCoeff() > 0.0);

  // covariance: building at a shifted origin reproduces the shifted
  // configuration on the common sites
  FiniteRealization d = build_bulk(g, {5, 5}, false, 42, {2, 0});
  for (int x = 2; x < 5; ++x)
    for (int y = 0; y < 5; ++y) {
      int ia = a.site_index.at({x, y});
      int id = d.site_index.at({x, y});
      for (int orb = 0; orb < 2; ++orb)
        CHECK(std::abs(Matrix(a.H)(a.row(ia, orb), a.row(ia, orb)) -
                       Matrix(d.H)(d.row(id, orb), d.row(id, orb))) < 1e-15);
    }
}

TEST_CASE("hermiticity guard on model files") {
  ModelSpec bad(1, 2);
  Matrix t(2, 2);
  t << 0, 1, 0, 0;
  bad.add_hopping({1}, t);
  // overwrite the mirror with something wrong and validate
  bad.hoppings[{-1}](0, 0) = 5;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("hermiticity"), Error);
}

TEST_CASE("model file round trip") {
  ModelSpec g = preset_honeycomb_lambda(1.7);
  g.disorder = {DisorderLaw::Kind::uniform_hopping, 0.25};
  std::string text = emit_model(g);
  ModelSpec back = parse_model(text);
  CHECK(back.d == g.d);
  CHECK(back.N == g.N);
  CHECK(back.chiral == g.chiral);
  CHECK(back.disorder.strength == g.disorder.strength);
  CHECK(back.hoppings.size() == g.hoppings.size());
  for (auto& [x, t] : g.hoppings)
    CHECK((back.hoppings.at(x) - t).cwiseAbs().maxCoeff() < 1e-15);
  // corrupted hermiticity in the file is a validation error
  std::string broken = text;
  auto pos = broken.find("\"re\"");
  (void)pos;
  ModelSpec tampered = g;
  tampered.hoppings[{1, 0}](0, 1) = 2.0;  // break t_{-x} = t_x^dagger
  CHECK_THROWS_AS(parse_model(emit_model(tampered)), Error);
}
