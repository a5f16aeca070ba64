#include "topolat/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "topolat/halfspace.hpp"
#include "topolat/index.hpp"
#include "topolat/invariants.hpp"

namespace topolat {

namespace {

uint64_t fnv64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[19];
  snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  return buf;
}

struct Emitter {
  std::string format = "tsv";
  std::ostringstream buf;

  void table(const std::vector<std::string>& cols,
             const std::vector<std::vector<std::string>>& rows) {
    if (format == "records") {
      for (auto& r : rows) {
        for (size_t i = 0; i < cols.size(); ++i)
          buf << (i ? " " : "") << cols[i] << "=" << r[i];
        buf << "\n";
      }
      return;
    }
    for (size_t i = 0; i < cols.size(); ++i) buf << (i ? "\t" : "") << cols[i];
    buf << "\n";
    for (auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i) buf << (i ? "\t" : "") << r[i];
      buf << "\n";
    }
  }
};

std::string fmt(double v) {
  char buf[40];
  snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& kv) {
  std::map<std::string, double> out;
  for (auto& s : kv) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--param expects key=value");
    out[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
  }
  return out;
}

RealVector parse_vec(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  RealVector v(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) v[i] = vals[i];
  return v;
}

CutPlane cut_from_string(const std::string& s, double r) {
  RealVector v = parse_vec(s);
  bool integral = true;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v[i] - std::round(v[i])) > 1e-12) integral = false;
  if (integral) {
    IVec g(v.size());
    for (int i = 0; i < v.size(); ++i) g[i] = int(std::lround(v[i]));
    return make_cut(g, r);
  }
  return make_cut(v, r);
}

struct ModelArgs {
  std::string preset;
  std::string model_path;
  std::vector<std::string> params;

  ModelSpec resolve() const {
    if (!model_path.empty()) return load_model(model_path);
    if (preset.empty()) throw CLI::ValidationError("need --preset or --model");
    return preset_by_name(preset, parse_params(params));
  }
  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "named preset model");
    app->add_option("--model", model_path, "model file (JSON)");
    app->add_option("--param", params, "preset parameter key=value")
        ->take_all();
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  auto t0 = std::chrono::steady_clock::now();
  CLI::App app{"bulk and boundary topology of tight-binding lattice models"};
  app.require_subcommand(1);

  Emitter em;
  std::string manifest_path = "topolat-manifest.json";
  int threads = 1;
  app.add_option("--format", em.format, "tsv|records")
      ->check(CLI::IsMember({"tsv", "records"}));
  app.add_option("--manifest", manifest_path, "manifest sidecar path ('' = off)");
  app.add_option("--threads", threads, "parallel workers (deterministic reduction)");

  ModelArgs margs;
  std::string model_hash = "-";

  // ---- presets ----
  auto* sub_presets = app.add_subcommand("presets", "list model presets");

  // ---- bulk-invariants ----
  auto* sub_bulk = app.add_subcommand("bulk-invariants", "Chern/winding numbers");
  margs.attach(sub_bulk);
  std::string op = "winding", dir_s = "1", dir2_s = "", path = "kspace";
  int kgrid = 240, boxL = 24, margin = -1, harper_q = 0;
  double fermi = 0.0;
  sub_bulk->add_option("--op", op, "winding|chern2")
      ->check(CLI::IsMember({"winding", "chern2"}));
  sub_bulk->add_option("--dir", dir_s, "pairing direction, comma separated");
  sub_bulk->add_option("--dir2", dir2_s, "second direction for chern2");
  sub_bulk->add_option("--kgrid", kgrid, "k-grid nodes per axis");
  sub_bulk->add_option("--path", path, "kspace|realspace");
  sub_bulk->add_option("--box", boxL, "real-space box edge");
  sub_bulk->add_option("--margin", margin, "real-space trace margin");
  sub_bulk->add_option("--fermi", fermi, "Fermi level (chern2)");
  sub_bulk->add_option("--magnetic-q", harper_q, "magnetic Bloch cell (flux q)");

  // ---- dos ----
  auto* sub_dos = app.add_subcommand("dos", "density of states histogram");
  margs.attach(sub_dos);
  int bins = 512, dos_kgrid = 0, samples = 1, dos_box = 0;
  uint64_t seed = 1;
  double exp_at = std::nan("");
  sub_dos->add_option("--bins", bins);
  sub_dos->add_option("--kgrid", dos_kgrid, "clean-path grid (per axis)");
  sub_dos->add_option("--samples", samples, "disorder-path seeds");
  sub_dos->add_option("--box", dos_box, "disorder-path box edge");
  sub_dos->add_option("--seed", seed);
  sub_dos->add_option("--exponent-at", exp_at, "fit pseudogap exponent at E0");

  // ---- edge-density ----
  auto* sub_edge = app.add_subcommand("edge-density", "signed zero-mode density");
  margs.attach(sub_edge);
  std::string cut_s = "1,0";
  double offset = 0.25, eps_zero = -1, smooth_eps = 0, kt_strength = 0;
  int W = 32, Lpar = 64, offsets = 1, kt_strip = 1;
  uint64_t kt_seed = 7, slab_seed = 0;
  bool dump_modes = false;
  sub_edge->add_option("--cut", cut_s, "surface normal, comma separated");
  sub_edge->add_option("--offset", offset, "cut offset r");
  sub_edge->add_option("--width", W, "slab depth (sites per column)");
  sub_edge->add_option("--length", Lpar, "parallel columns");
  sub_edge->add_option("--offsets", offsets, "average over this many offsets");
  sub_edge->add_option("--eps-zero", eps_zero, "zero-mode threshold (-1 = auto)");
  sub_edge->add_option("--smooth", smooth_eps, "smooth switch width (0 = sharp)");
  sub_edge->add_option("--ktilde-strength", kt_strength, "boundary term norm");
  sub_edge->add_option("--ktilde-strip", kt_strip, "boundary term strip layers");
  sub_edge->add_option("--ktilde-seed", kt_seed);
  sub_edge->add_option("--seed", slab_seed, "disorder seed");
  sub_edge->add_flag("--dump-modes", dump_modes, "emit per-mode records");

  // ---- bbc ----
  auto* sub_bbc = app.add_subcommand("bbc", "bulk vs edge comparison");
  margs.attach(sub_bbc);
  sub_bbc->add_option("--cut", cut_s);
  sub_bbc->add_option("--offset", offset);
  sub_bbc->add_option("--width", W);
  sub_bbc->add_option("--length", Lpar);
  sub_bbc->add_option("--kgrid", kgrid);
  sub_bbc->add_option("--offsets", offsets);
  sub_bbc->add_option("--ktilde-strength", kt_strength);
  sub_bbc->add_option("--ktilde-seed", kt_seed);
  sub_bbc->add_option("--seed", slab_seed);

  // ---- besov ----
  auto* sub_besov = app.add_subcommand("besov", "Besov norms of operator profiles");
  margs.attach(sub_besov);
  std::string object = "h";
  double bs = 0.5, bp = 2, bq = 2;
  int max_range = 8, prof_grid = 128, Nsm = 0, t_per_octave = 1;
  bool with_fd = false;
  sub_besov->add_option("--object", object, "h|uF|pF")
      ->check(CLI::IsMember({"h", "uF", "pF"}));
  sub_besov->add_option("--s", bs);
  sub_besov->add_option("--p", bp);
  sub_besov->add_option("--q", bq);
  sub_besov->add_option("--max-range", max_range, "profile truncation radius");
  sub_besov->add_option("--profile-grid", prof_grid, "coefficient quadrature grid");
  sub_besov->add_flag("--fd", with_fd, "also compute the finite-difference norm");
  sub_besov->add_option("--Nsm", Nsm, "modulus order (default ceil(s)+1)");
  sub_besov->add_option("--t-per-octave", t_per_octave);

  // ---- hankel ----
  auto* sub_hankel = app.add_subcommand("hankel", "Hankel truncations and Peller checks");
  std::string family = "uw";
  int hankel_L = 64, fam_n = 5;
  double schatten_p = 1.0, step_eps = 0.2;
  bool dump_sv = false, peller = false;
  sub_hankel->add_option("--family", family, "uw|step|geometric")
      ->check(CLI::IsMember({"uw", "step", "geometric"}));
  sub_hankel->add_option("--L", hankel_L, "truncation length");
  sub_hankel->add_option("--n", fam_n, "family size");
  sub_hankel->add_option("--p", schatten_p, "Schatten exponent");
  sub_hankel->add_option("--eps", step_eps, "step smoothing");
  sub_hankel->add_flag("--dump-sv", dump_sv, "emit singular values");
  sub_hankel->add_flag("--peller", peller, "emit Peller ratios");

  // ---- index ----
  auto* sub_index = app.add_subcommand("index", "Fredholm index numerics");
  margs.attach(sub_index);
  std::string method = "toeplitz";
  int idx_L = 200, fed_m = 1, idx_seeds = 50, chain = 200;
  sub_index->add_option("--method", method, "toeplitz|ssh-check|disordered|fedosov-shift")
      ->check(CLI::IsMember({"toeplitz", "ssh-check", "disordered", "fedosov-shift"}));
  sub_index->add_option("--L", idx_L);
  sub_index->add_option("--m", fed_m);
  sub_index->add_option("--seeds", idx_seeds);
  sub_index->add_option("--chain", chain);
  sub_index->add_option("--kgrid", kgrid);
  sub_index->add_option("--seed", seed);

  // ---- sweep ----
  auto* sub_sweep = app.add_subcommand("sweep", "parameter sweeps of invariants");
  margs.attach(sub_sweep);
  std::string sweep_spec = "lambda=0.2:3.0:0.1";
  sub_sweep->add_option("--range", sweep_spec, "name=lo:hi:step");
  sub_sweep->add_option("--op", op, "winding");
  sub_sweep->add_option("--dir", dir_s);
  sub_sweep->add_option("--kgrid", kgrid);

  std::vector<std::string> args = argv;
  std::vector<const char*> cargs;
  cargs.push_back("topolat");
  for (auto& a : args) cargs.push_back(a.c_str());
  try {
    app.parse(int(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  try {
    if (sub_presets->parsed()) {
      std::vector<std::vector<std::string>> rows;
      for (auto& n : preset_names()) rows.push_back({n});
      em.table({"preset"}, rows);
    } else if (sub_bulk->parsed()) {
      ModelSpec model = margs.resolve();
      model_hash = hex64(fnv64(emit_model(model)));
      RealVector dv = parse_vec(dir_s);
      Direction dir = Direction::of(dv);
      if (op == "winding") {
        InvariantResult r =
            path == "kspace"
                ? winding_number_model(model, dir, kgrid)
                : winding_number_real(model, dir,
                                      boxL, margin > 0 ? margin : boxL / 3);
        em.table({"op", "dir", "value", "error", "path", "resolution"},
                 {{"winding", dir_s, fmt(r.value), fmt(r.error_estimate), r.path,
                   path == "kspace" ? std::to_string(kgrid) : std::to_string(boxL)}});
      } else {
        Direction dir2 = Direction::of(parse_vec(dir2_s.empty() ? "0,1" : dir2_s));
        BlochMap bm = harper_q > 0 ? make_magnetic_bloch_map(model, harper_q)
                                   : make_bloch(model);
        InvariantResult r = even_chern_kspace(bm, fermi, dir, dir2, kgrid);
        em.table({"op", "dir", "dir2", "value", "error", "path", "resolution"},
                 {{"chern2", dir_s, dir2_s.empty() ? "0,1" : dir2_s, fmt(r.value),
                   fmt(r.error_estimate), r.path, std::to_string(kgrid)}});
      }
    } else if (sub_dos->parsed()) {
      ModelSpec model = margs.resolve();
      model_hash = hex64(fnv64(emit_model(model)));
      DosOptions opt;
      opt.bins = bins;
      opt.kgrid = dos_kgrid;
      opt.samples = samples;
      opt.seed = seed;
      if (dos_box > 0) opt.box = IVec(model.d, dos_box);
      DosHistogram h = dos(model, opt);
      std::vector<std::vector<std::string>> rows;
      for (int b = 0; b < h.bins(); ++b)
        rows.push_back({fmt(h.edges[b]), fmt(h.edges[b + 1]), fmt(h.mass[b])});
      em.table({"E_left", "E_right", "mass"}, rows);
      if (!std::isnan(exp_at)) {
        PseudogapFit fit = pseudogap_exponent(h, exp_at);
        em.table({"E0", "gamma", "stderr", "gap_detected", "eps_lo", "eps_hi"},
                 {{fmt(exp_at), fit.gap_detected ? "-" : fmt(fit.gamma),
                   fit.gap_detected ? "-" : fmt(fit.stderr_),
                   fit.gap_detected ? "yes" : "no", fmt(fit.eps_lo),
                   fmt(fit.eps_hi)}});
      }
    } else if (sub_edge->parsed() || sub_bbc->parsed()) {
      ModelSpec model = margs.resolve();
      model_hash = hex64(fnv64(emit_model(model)));
      CutPlane cut = cut_from_string(cut_s, offset);
      SlabOptions sopt;
      sopt.W = W;
      sopt.L = Lpar;
      BoundaryTerm kt;
      if (kt_strength > 0) {
        kt.kind = BoundaryTerm::Kind::random_chiral;
        kt.strength = kt_strength;
        kt.strip = kt_strip;
        kt.seed = kt_seed;
      }
      if (sub_bbc->parsed()) {
        BbcRecord rec = bbc_check(model, cut, kgrid, sopt, kt, slab_seed, offsets);
        em.table({"cut", "bulk", "bulk_err", "edge", "edge_err", "gap"},
                 {{cut_s, fmt(rec.bulk.value), fmt(rec.bulk.error_estimate),
                   fmt(rec.edge.value), fmt(rec.edge.error_estimate),
                   fmt(rec.gap)}});
      } else {
        auto density_at = [&](double rr) {
          CutPlane c2 = cut;
          c2.r = rr;
          SlabRealization slab =
              smooth_eps > 0 ? smooth_restrict(model, c2, sopt, smooth_eps, slab_seed)
                             : restrict_halfspace(model, c2, sopt, kt, slab_seed);
          ZeroModeReport rep = zero_modes(slab, eps_zero);
          if (dump_modes) {
            std::vector<std::vector<std::string>> rows;
            for (auto& m : rep.modes)
              rows.push_back({fmt(m.value), fmt(m.chirality), fmt(m.near_weight)});
            em.table({"mode_value", "chirality", "near_weight"}, rows);
          }
          InvariantResult res = signed_surface_density(slab, rep);
          res.params["n_plus"] = std::to_string(rep.n_plus);
          res.params["n_minus"] = std::to_string(rep.n_minus);
          return res;
        };
        InvariantResult res;
        if (offsets > 1) {
          double period = cut.rational ? cut.lambda_xi : 1.0;
          std::vector<double> rs;
          for (int i = 0; i < offsets; ++i)
            rs.push_back(offset + period * (i + 0.5) / offsets);
          res = offset_average(density_at, cut, rs);
        } else {
          res = density_at(offset);
        }
        em.table({"cut", "r", "W", "L", "n_plus", "n_minus", "density", "error"},
                 {{cut_s, fmt(offset), std::to_string(W), std::to_string(Lpar),
                   res.params.count("n_plus") ? res.params["n_plus"] : "-",
                   res.params.count("n_minus") ? res.params["n_minus"] : "-",
                   fmt(res.value), fmt(res.error_estimate)}});
      }
    } else if (sub_besov->parsed()) {
      ModelSpec model = margs.resolve();
      model_hash = hex64(fnv64(emit_model(model)));
      OperatorProfile prof =
          object == "h"
              ? profile_of_model(model)
              : profile_from_bloch(
                    model,
                    [&](const Matrix& hk) -> Matrix {
                      if (object == "uF") {
                        Matrix u = fermi_unitary_bloch(hk);
                        int half = int(u.rows());
                        Matrix w = Matrix::Zero(2 * half, 2 * half);
                        w.topRightCorner(half, half) = u;
                        w.bottomLeftCorner(half, half) = u.adjoint();
                        return w;
                      }
                      EigenSystem es = eigensystem(hk);
                      return fermi_projection(es, 0.0);
                    },
                    prof_grid, max_range);
      double bn = besov_norm(prof, {bs, bp, bq});
      std::vector<std::string> cols{"object", "s", "p", "q", "besov", "support"};
      std::vector<std::string> row{object, fmt(bs), fmt(bp), fmt(bq), fmt(bn),
                                   std::to_string(prof.support_radius())};
      if (with_fd) {
        int order = Nsm > 0 ? Nsm : int(std::ceil(bs)) + 1;
        double fd = finite_difference_norm(prof, bs, bp, bq, order, t_per_octave);
        cols.push_back("finite_difference");
        row.push_back(fmt(fd));
      }
      em.table(cols, {row});
    } else if (sub_hankel->parsed()) {
      std::vector<OperatorProfile> fam;
      if (family == "uw") {
        for (int w = 1; w <= fam_n; ++w) {
          OperatorProfile a(1, 1);
          a.set({w}, Matrix::Identity(1, 1));
          fam.push_back(a);
        }
      } else if (family == "geometric") {
        OperatorProfile a(1, 1);
        for (int n = 0; n <= hankel_L; ++n)
          a.set({n + 1}, Matrix::Identity(1, 1) * std::pow(2.0, -(n + 1)));
        fam.push_back(a);
      } else {
        // smoothed steps with shrinking smoothing
        for (int i = 0; i < fam_n; ++i) {
          double epsi = step_eps / (1 << i);
          OperatorProfile a(1, 1);
          for (int n = -hankel_L; n <= hankel_L; ++n) {
            if (n == 0) continue;
            // Fourier coefficients of a smooth step of width epsi
            double c = std::exp(-0.5 * std::pow(2 * pi * n * epsi, 2)) / (2 * pi * n);
            a.set({n}, Matrix::Identity(1, 1) * cplx(0, -c));
          }
          fam.push_back(a);
        }
      }
      std::vector<std::vector<std::string>> rows;
      if (peller) {
        PellerReport rep = peller_ratio(fam, schatten_p, hankel_L);
        for (size_t i = 0; i < rep.ratios.size(); ++i)
          rows.push_back({std::to_string(i), fmt(rep.ratios[i])});
        rows.push_back({"sup", fmt(rep.sup)});
        em.table({"symbol", "ratio"}, rows);
      } else {
        for (size_t i = 0; i < fam.size(); ++i) {
          Matrix H = hankel_operator(fam[i], hankel_L);
          RealVector sv = singular_values(H);
          int rank = 0;
          for (int k = 0; k < sv.size(); ++k)
            if (sv[k] > 1e-10 * std::max(1.0, sv[0])) ++rank;
          rows.push_back({std::to_string(i), std::to_string(hankel_L),
                          fmt(schatten_norm(H, schatten_p)), std::to_string(rank)});
          if (dump_sv) {
            std::vector<std::vector<std::string>> svr;
            for (int k = 0; k < std::min<int>(16, sv.size()); ++k)
              svr.push_back({std::to_string(k), fmt(sv[k])});
            em.table({"k", "sigma"}, svr);
          }
        }
        em.table({"symbol", "L", "schatten", "numerical_rank"}, rows);
      }
    } else if (sub_index->parsed()) {
      if (method == "ssh-check" || method == "disordered" || method == "toeplitz") {
        ModelSpec model = margs.resolve();
        model_hash = hex64(fnv64(emit_model(model)));
        if (method == "ssh-check") {
          SobolevCheck chk = sobolev_index_check(model, kgrid, idx_L);
          em.table({"winding", "index", "residual"},
                   {{fmt(chk.winding), fmt(chk.index), fmt(chk.residual)}});
        } else if (method == "disordered") {
          DisorderedIndexStats st =
              disordered_chain_index(model, chain, idx_seeds, seed, kgrid);
          em.table({"seeds", "mean_index", "sigma", "clean_winding"},
                   {{std::to_string(st.seeds), fmt(st.mean), fmt(st.sigma),
                     fmt(st.clean_winding)}});
        } else {
          OperatorProfile uf = profile_from_bloch(
              model, [](const Matrix& h) { return fermi_unitary_bloch(h); }, 512,
              40, 1e-13);
          IndexReport rep = toeplitz_index(uf, idx_L);
          em.table({"method", "L", "kernel", "cokernel", "index"},
                   {{rep.method, std::to_string(rep.parameter), fmt(rep.kernel),
                     fmt(rep.cokernel), fmt(rep.index)}});
        }
      } else {
        // fedosov-shift: rectangular truncation of the unilateral shift,
        // S*S = 1 on the retained block
        int n = idx_L;
        Matrix S = Matrix::Zero(n + 1, n);
        for (int i = 0; i < n; ++i) S(i + 1, i) = 1;
        IndexReport rep = fedosov_index(S, fed_m);
        em.table({"method", "m", "kernel", "cokernel", "index", "residual"},
                 {{rep.method, std::to_string(rep.parameter), fmt(rep.kernel),
                   fmt(rep.cokernel), fmt(rep.index), fmt(rep.residual)}});
      }
    } else if (sub_sweep->parsed()) {
      ModelSpec base = margs.resolve();
      auto eq = sweep_spec.find('=');
      if (eq == std::string::npos)
        throw CLI::ValidationError("--range expects name=lo:hi:step");
      std::string pname = sweep_spec.substr(0, eq);
      RealVector triple = parse_vec([&] {
        std::string s = sweep_spec.substr(eq + 1);
        for (auto& c : s)
          if (c == ':') c = ',';
        return s;
      }());
      if (triple.size() != 3) throw CLI::ValidationError("--range needs lo:hi:step");
      Direction dir = Direction::of(parse_vec(dir_s));
      std::string preset = margs.preset;
      auto op_at = [&](double x) {
        auto params = parse_params(margs.params);
        params[pname] = x;
        ModelSpec m = preset_by_name(preset, params);
        return winding_number_model(m, dir, kgrid);
      };
      auto rows = weak_invariant_sweep(op_at, triple[0], triple[1], triple[2],
                                       threads);
      std::vector<std::vector<std::string>> trows;
      for (size_t i = 0; i < rows.size(); ++i) {
        std::string delta =
            i > 0 && rows[i].status == "ok" && rows[i - 1].status == "ok"
                ? fmt(rows[i].value - rows[i - 1].value)
                : "-";
        trows.push_back({fmt(rows[i].parameter), fmt(rows[i].value),
                         fmt(rows[i].error), rows[i].status, delta});
      }
      em.table({pname, "value", "error", "status", "delta_prev"}, trows);
      model_hash = hex64(fnv64(emit_model(base)));
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const CLI::ValidationError& e) {
    err << e.what() << "\n";
    return 2;
  }

  std::string payload = em.buf.str();
  out << payload;

  if (!manifest_path.empty()) {
    auto t1 = std::chrono::steady_clock::now();
    nlohmann::json man;
    man["tool"] = "topolat";
    man["version"] = kToolVersion;
    std::string cmd;
    for (auto& a : argv) cmd += (cmd.empty() ? "" : " ") + a;
    man["command"] = cmd;
    man["model_hash"] = model_hash;
    man["output_hash"] = hex64(fnv64(payload));
    man["wall_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    std::ofstream mf(manifest_path);
    mf << man.dump(2) << "\n";
  }
  return 0;
}

}  // namespace topolat
