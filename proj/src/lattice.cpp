#include "topolat/lattice.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace topolat {

void ModelSpec::add_hopping(const IVec& x, const Matrix& t) {
  if (int(x.size()) != d) throw Error("ValidationError", "displacement dimension mismatch");
  if (t.rows() != N || t.cols() != N) throw Error("ValidationError", "hopping block size mismatch");
  bool zero = true;
  for (int c : x) zero = zero && c == 0;
  if (zero) {
    if ((t - t.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
      throw Error("ValidationError", "hermiticity: t_0 must be Hermitian");
    hoppings[x] = t;
    return;
  }
  auto it = hoppings.find(-x);
  if (it != hoppings.end() &&
      (it->second - Matrix(t.adjoint())).cwiseAbs().maxCoeff() > 1e-12)
    throw Error("ValidationError", "hermiticity: t_{-x} != t_x^dagger");
  hoppings[x] = t;
  hoppings[-x] = t.adjoint();
}

int ModelSpec::range() const {
  int m = 0;
  for (auto& [x, t] : hoppings) m = std::max(m, norm_inf(x));
  return m;
}

void ModelSpec::validate() const {
  if (d < 1 || N < 1) throw Error("ValidationError", "d and N must be positive");
  if (B.rows() != d || B.cols() != d)
    throw Error("ValidationError", "B must be d x d");
  if ((B + B.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error("ValidationError", "B must be antisymmetric");
  for (auto& [x, t] : hoppings) {
    auto it = hoppings.find(-x);
    if (it == hoppings.end() ||
        (it->second - Matrix(t.adjoint())).cwiseAbs().maxCoeff() > 1e-12)
      throw Error("ValidationError", "hermiticity: t_{-x} != t_x^dagger");
  }
  if (chiral) {
    if (N % 2 != 0) throw Error("ValidationError", "chiral flag requires even N");
    ChiralGrading J(N);
    Matrix Jm = J.matrix();
    for (auto& [x, t] : hoppings) {
      if ((Jm * t * Jm + t).cwiseAbs().maxCoeff() > 1e-12)
        throw Error("ValidationError", "chiral flag requires J t_x J = -t_x");
    }
  }
}

std::vector<int> FiniteRealization::interior(int m) const {
  std::vector<int> idx;
  if (periodic) {
    idx.resize(sites.size());
    for (size_t i = 0; i < sites.size(); ++i) idx[i] = int(i);
    return idx;
  }
  if (box.empty()) throw Error("EmptyInterior", "no box geometry for interior");
  for (size_t i = 0; i < sites.size(); ++i) {
    bool in = true;
    for (int j = 0; j < d; ++j) {
      int c = sites[i][j] - origin[j];
      if (c < m || c >= box[j] - m) in = false;
    }
    if (in) idx.push_back(int(i));
  }
  return idx;
}

double hop_phase(const RealMatrix& B, const IVec& y, int axis, int dir) {
  // B_plus = strictly lower-triangular part of B; hop y -> y + dir*e_axis.
  double ph = 0;
  for (int j = 0; j < int(y.size()); ++j)
    if (j < axis) ph += B(axis, j) * y[j];
  if (dir > 0) return ph;
  // reverse hop: minus the phase of the canonical hop (y - e_axis) -> y
  double phb = 0;
  IVec src = y;
  src[axis] -= 1;
  for (int j = 0; j < int(y.size()); ++j)
    if (j < axis) phb += B(axis, j) * src[j];
  return -phb;
}

double translation_phase(const RealMatrix& B, const IVec& y, const IVec& x) {
  // u^x = u_1^{x1} ... u_d^{xd}; rightmost factor acts first
  double ph = 0;
  IVec cur = y;
  for (int axis = int(x.size()) - 1; axis >= 0; --axis) {
    int dir = x[axis] >= 0 ? 1 : -1;
    for (int s = 0; s < std::abs(x[axis]); ++s) {
      ph += hop_phase(B, cur, axis, dir);
      cur[axis] += dir;
    }
  }
  return ph;
}

namespace {

double disorder_value(const DisorderLaw& law, uint64_t seed, const IVec& x,
                      uint64_t tag) {
  double u = uniform01(hash_coord(seed, x, tag));
  return law.strength * (u - 0.5);
}

}  // namespace

FiniteRealization build_bulk(const ModelSpec& model, const IVec& box,
                             bool periodic, uint64_t seed, const IVec& origin) {
  model.validate();
  if (int(box.size()) != model.d) throw Error("ValidationError", "box dimension mismatch");
  int m_range = model.range();
  for (int j = 0; j < model.d; ++j)
    if (box[j] <= 2 * m_range)
      throw Error("RangeTooLarge", "box edge must exceed twice the hopping range");
  if (periodic && model.has_field()) {
    // gauge phase e^{i B_{kj} y_j} (j < k) must be box-periodic in y_j
    for (int k = 0; k < model.d; ++k)
      for (int j = 0; j < k; ++j) {
        double flux = model.B(k, j) * box[j];
        if (std::abs(flux - 2 * pi * std::round(flux / (2 * pi))) > 1e-9)
          throw Error("IncommensurateFlux",
                      "magnetic flux not commensurate with the box");
      }
  }

  FiniteRealization r;
  r.d = model.d;
  r.N = model.N;
  r.box = box;
  r.origin = origin.empty() ? IVec(model.d, 0) : origin;
  r.periodic = periodic;
  r.seed = seed;
  r.chiral = model.chiral && model.disorder.kind != DisorderLaw::Kind::uniform_onsite;
  r.margin = std::max(1, 2 * m_range);

  long n_sites = 1;
  for (int j = 0; j < model.d; ++j) n_sites *= box[j];
  r.sites.reserve(n_sites);
  IVec c(model.d, 0);
  for (long i = 0; i < n_sites; ++i) {
    IVec abs = c;
    for (int j = 0; j < model.d; ++j) abs[j] += r.origin[j];
    r.site_index[abs] = int(r.sites.size());
    r.sites.push_back(abs);
    for (int j = model.d - 1; j >= 0; --j) {
      if (++c[j] < box[j]) break;
      c[j] = 0;
    }
  }

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(n_sites * model.N * model.N * (model.hoppings.size() + 1));
  const int N = model.N;

  for (int iy = 0; iy < int(r.sites.size()); ++iy) {
    const IVec& y = r.sites[iy];
    for (auto& [x, t] : model.hoppings) {
      bool zero_disp = norm_inf(x) == 0;
      // place each unordered site pair once, from the canonical direction
      if (!zero_disp && x < -x) continue;
      IVec z = y + x;
      if (periodic) {
        for (int j = 0; j < model.d; ++j) {
          int c0 = z[j] - r.origin[j];
          c0 = ((c0 % box[j]) + box[j]) % box[j];
          z[j] = c0 + r.origin[j];
        }
      }
      auto it = r.site_index.find(z);
      if (it == r.site_index.end()) continue;
      int iz = it->second;
      cplx phase = std::exp(iu * translation_phase(model.B, y, x));
      Matrix block = t * phase;
      if (model.disorder.kind == DisorderLaw::Kind::uniform_hopping && !zero_disp) {
        uint64_t tag = 0x51ab;
        IVec bond = y;
        bond.insert(bond.end(), x.begin(), x.end());
        block *= (1.0 + disorder_value(model.disorder, seed, bond, tag));
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
        double v = disorder_value(model.disorder, seed, key, 0xd1a6);
        if (v != 0) trip.emplace_back(r.row(iy, a), r.row(iy, a), cplx(v, 0));
      }
    }
  }

  r.H.resize(r.dim(), r.dim());
  r.H.setFromTriplets(trip.begin(), trip.end());
  return r;
}

Matrix bloch_hamiltonian(const ModelSpec& model, const RealVector& k) {
  if (model.has_field() || !model.clean())
    throw Error("NotTranslationInvariant",
                "bloch_hamiltonian requires B = 0 and no disorder");
  Matrix h = Matrix::Zero(model.N, model.N);
  for (auto& [x, t] : model.hoppings) {
    double kx = 0;
    for (int j = 0; j < model.d; ++j) kx += k[j] * x[j];
    h += t * std::exp(iu * (2 * pi * kx));
  }
  return h;
}

Matrix magnetic_bloch(const ModelSpec& model, int q, const RealVector& k) {
  if (model.d != 2) throw Error("ValidationError", "magnetic Bloch path is d = 2 only");
  if (!model.clean()) throw Error("NotTranslationInvariant", "disorder present");
  double b = model.B(1, 0);  // phase on e_2 hops is e^{i b y_1}
  if (std::abs(b * q - 2 * pi * std::round(b * q / (2 * pi))) > 1e-10)
    throw Error("IncommensurateFlux", "flux is not a multiple of 2*pi/q");
  const int N = model.N;
  Matrix H = Matrix::Zero(q * N, q * N);
  for (auto& [x, t] : model.hoppings) {
    cplx bloch = std::exp(iu * (2 * pi * (k[0] * x[0] + k[1] * x[1])));
    for (int m = 0; m < q; ++m) {
      int mp = ((m + x[0]) % q + q) % q;
      cplx phase = std::exp(iu * (b * x[1] * m)) * bloch;
      H.block(mp * N, m * N, N, N) += t * phase;
    }
  }
  return H;
}

SparseMatrix magnetic_translation(const ModelSpec& model,
                                  const FiniteRealization& r, const IVec& x) {
  std::vector<Eigen::Triplet<cplx>> trip;
  bool any = false;
  for (int iy = 0; iy < r.n_sites(); ++iy) {
    IVec z = r.sites[iy] + x;
    auto it = r.site_index.find(z);
    if (it == r.site_index.end()) continue;
    any = true;
    cplx phase = std::exp(iu * translation_phase(model.B, r.sites[iy], x));
    for (int a = 0; a < r.N; ++a)
      trip.emplace_back(r.row(it->second, a), r.row(iy, a), phase);
  }
  if (!any) throw Error("EmptyInterior", "shifted interior is empty");
  SparseMatrix U(r.dim(), r.dim());
  U.setFromTriplets(trip.begin(), trip.end());
  return U;
}

Matrix grading_matrix(const FiniteRealization& r) {
  ChiralGrading J(r.N);
  Matrix Jm = Matrix::Zero(r.dim(), r.dim());
  for (int i = 0; i < r.n_sites(); ++i)
    for (int a = 0; a < r.N; ++a) Jm(r.row(i, a), r.row(i, a)) = J.sign(a);
  return Jm;
}

// ---- presets -----------------------------------------------------------

ModelSpec preset_graphene() { return preset_honeycomb_lambda(1.0); }

ModelSpec preset_honeycomb_lambda(double lambda) {
  ModelSpec m(2, 2);
  m.chiral = true;
  m.name = lambda == 1.0 ? "graphene" : "honeycomb-lambda";
  Matrix t0 = Matrix::Zero(2, 2), t1 = Matrix::Zero(2, 2);
  t0(0, 1) = lambda;
  t0(1, 0) = lambda;
  t1(0, 1) = 1.0;  // upper-right picks up e^{2 pi i k_j}
  m.add_hopping({0, 0}, t0);
  m.add_hopping({1, 0}, t1);
  m.add_hopping({0, 1}, t1);
  return m;
}

ModelSpec preset_ssh(double lambda) {
  ModelSpec m(1, 2);
  m.chiral = true;
  m.name = "ssh";
  Matrix t0 = Matrix::Zero(2, 2), t1 = Matrix::Zero(2, 2);
  t0(0, 1) = lambda;
  t0(1, 0) = lambda;
  t1(0, 1) = 1.0;
  m.add_hopping({0}, t0);
  m.add_hopping({1}, t1);
  return m;
}

ModelSpec preset_harper(int p, int q) {
  ModelSpec m(2, 1);
  m.name = "harper";
  Matrix one = Matrix::Identity(1, 1);
  m.B = RealMatrix::Zero(2, 2);
  m.B(0, 1) = 2 * pi * double(p) / q;
  m.B(1, 0) = -2 * pi * double(p) / q;
  m.add_hopping({1, 0}, one);
  m.add_hopping({0, 1}, one);
  return m;
}

ModelSpec preset_chern_two_band(double mass) {
  // h(k) = sin(2 pi k1) s1 + sin(2 pi k2) s2 + (m - cos(2 pi k1) - cos(2 pi k2)) s3
  ModelSpec m(2, 2);
  m.name = "chern-two-band";
  Matrix s1 = Matrix::Zero(2, 2), s2 = Matrix::Zero(2, 2), s3 = Matrix::Zero(2, 2);
  s1(0, 1) = 1;
  s1(1, 0) = 1;
  s2(0, 1) = -iu;
  s2(1, 0) = iu;
  s3(0, 0) = 1;
  s3(1, 1) = -1;
  m.add_hopping({0, 0}, mass * s3);
  m.add_hopping({1, 0}, (s1 / (2.0 * iu)) - 0.5 * s3);
  m.add_hopping({0, 1}, (s2 / (2.0 * iu)) - 0.5 * s3);
  return m;
}

ModelSpec preset_stacked_ssh(double lambda) {
  ModelSpec m(3, 2);
  m.chiral = true;
  m.name = "stacked-ssh";
  Matrix t0 = Matrix::Zero(2, 2), t1 = Matrix::Zero(2, 2);
  t0(0, 1) = lambda;
  t0(1, 0) = lambda;
  t1(0, 1) = 1.0;
  m.add_hopping({0, 0, 0}, t0);
  m.add_hopping({1, 0, 0}, t1);
  return m;
}

std::vector<std::string> preset_names() {
  return {"graphene", "honeycomb-lambda", "ssh", "harper", "chern-two-band",
          "stacked-ssh"};
}

ModelSpec preset_by_name(const std::string& name,
                         const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double dflt) {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
  };
  if (name == "graphene") return preset_graphene();
  if (name == "honeycomb-lambda") return preset_honeycomb_lambda(get("lambda", 1.0));
  if (name == "ssh") return preset_ssh(get("lambda", 0.5));
  if (name == "harper")
    return preset_harper(int(get("p", 1)), int(get("q", 3)));
  if (name == "chern-two-band") return preset_chern_two_band(get("m", 1.0));
  if (name == "stacked-ssh") return preset_stacked_ssh(get("lambda", 0.5));
  throw Error("ParseError", "unknown preset '" + name + "'");
}

// ---- model files -------------------------------------------------------

using nlohmann::json;

std::string emit_model(const ModelSpec& spec) {
  json j;
  j["d"] = spec.d;
  j["N"] = spec.N;
  j["chiral"] = spec.chiral;
  if (!spec.name.empty()) j["name"] = spec.name;
  json hops = json::array();
  for (auto& [x, t] : spec.hoppings) {
    json h;
    h["x"] = x;
    json re = json::array(), im = json::array();
    for (int a = 0; a < spec.N; ++a) {
      json rr = json::array(), ri = json::array();
      for (int b = 0; b < spec.N; ++b) {
        rr.push_back(t(a, b).real());
        ri.push_back(t(a, b).imag());
      }
      re.push_back(rr);
      im.push_back(ri);
    }
    h["re"] = re;
    h["im"] = im;
    hops.push_back(h);
  }
  j["hoppings"] = hops;
  json B = json::array();
  for (int a = 0; a < spec.d; ++a) {
    json row = json::array();
    for (int b = 0; b < spec.d; ++b) row.push_back(spec.B(a, b));
    B.push_back(row);
  }
  j["B"] = B;
  json dis;
  dis["kind"] = spec.disorder.kind == DisorderLaw::Kind::none ? "none"
                : spec.disorder.kind == DisorderLaw::Kind::uniform_onsite
                    ? "uniform-onsite"
                    : "uniform-hopping";
  dis["strength"] = spec.disorder.strength;
  j["disorder"] = dis;
  return j.dump(2) + "\n";
}

ModelSpec parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("ParseError", e.what());
  }
  try {
    ModelSpec spec(j.at("d").get<int>(), j.at("N").get<int>());
    if (j.contains("name")) spec.name = j["name"].get<std::string>();
    if (j.contains("chiral")) spec.chiral = j["chiral"].get<bool>();
    if (j.contains("B")) {
      for (int a = 0; a < spec.d; ++a)
        for (int b = 0; b < spec.d; ++b)
          spec.B(a, b) = j["B"].at(a).at(b).get<double>();
    }
    if (j.contains("disorder")) {
      std::string kind = j["disorder"].value("kind", "none");
      spec.disorder.strength = j["disorder"].value("strength", 0.0);
      if (kind == "none")
        spec.disorder.kind = DisorderLaw::Kind::none;
      else if (kind == "uniform-onsite")
        spec.disorder.kind = DisorderLaw::Kind::uniform_onsite;
      else if (kind == "uniform-hopping")
        spec.disorder.kind = DisorderLaw::Kind::uniform_hopping;
      else
        throw Error("ParseError", "unknown disorder kind '" + kind + "'");
    }
    // Load the stored half directly; add_hopping enforces hermiticity
    // against any mirror already present.
    for (auto& h : j.at("hoppings")) {
      IVec x = h.at("x").get<IVec>();
      Matrix t(spec.N, spec.N);
      for (int a = 0; a < spec.N; ++a)
        for (int b = 0; b < spec.N; ++b)
          t(a, b) = cplx(h.at("re").at(a).at(b).get<double>(),
                         h.at("im").at(a).at(b).get<double>());
      auto it = spec.hoppings.find(x);
      if (it != spec.hoppings.end()) {
        if ((it->second - t).cwiseAbs().maxCoeff() > 1e-12)
          throw Error("ValidationError", "hermiticity");
        continue;
      }
      spec.add_hopping(x, t);
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error("ParseError", e.what());
  }
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ParseError", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace topolat
