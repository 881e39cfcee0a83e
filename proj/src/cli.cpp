#include "nhlab/cli.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string_view>

#include "CLI11.hpp"
#include "nhlab/pipelines.hpp"

namespace nhlab::cli {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Tables

Table branch_table(const ContinuationBranch& b) {
  Table t{{"arclength", "c", "anchor_x", "anchor_y", "T", "m", "lambda", "stability", "event"}, {}};
  for (const auto& p : b.points) {
    const auto& c = p.cycle;
    t.add({p.arclength, c.c, c.anchor[0], c.anchor[1], c.period, c.multiplier, c.lambda, to_string(c.stability),
           to_string(p.event)});
  }
  return t;
}

Table curve_table(const SectionCurve& c) {
  Table t{{"s", "a", "theta_unwrapped", "zeta", "beta", "provenance"}, {}};
  const std::string prov = to_string(c.provenance);
  for (std::size_t i = 0; i < c.size(); ++i) t.add({c.s[i], c.a[i], c.theta[i], c.zeta, c.beta, prov});
  return t;
}

Table orbit_table(const AngularOrbit& o) {
  Table t{{"beta", "zeta", "alpha_unwrapped"}, {}};
  for (std::size_t i = 0; i < o.zeta.size(); ++i) t.add({o.beta, o.zeta[i], o.alpha[i]});
  return t;
}

Table frame_table(const BundleFrame& f) {
  Table t{{"beta", "zeta", "alpha", "vec_a", "vec_theta"}, {}};
  for (std::size_t i = 0; i < f.zeta.size(); ++i) t.add({f.beta, f.zeta[i], f.alpha[i], f.da[i], f.dtheta[i]});
  return t;
}

Table type_number_table(const TypeNumberEstimate& e) {
  Table t{{"t", "nu_t", "sigma_t", "norm_A", "norm_B", "tangency_residual"}, {}};
  for (const auto& s : e.samples) {
    t.add({s.t, s.nu, s.sigma ? Cell(*s.sigma) : Cell(std::string()), s.norm_A, s.norm_B, s.tangency_residual});
  }
  return t;
}

std::vector<std::string> export_figure_data(const FigureResults& r, OutputSet& out, TableFormat fmt) {
  std::vector<std::string> names;
  const std::string ext = fmt == TableFormat::csv ? ".csv" : ".json";
  auto emit = [&](const std::string& stem, const Table& t) {
    out.write_table(stem, t, fmt);
    names.push_back(stem + ext);
  };
  for (const auto& [stem, b] : r.branches) emit(stem, branch_table(b));
  for (const auto& [stem, c] : r.curves) emit(stem, curve_table(c));
  for (const auto& [stem, o] : r.orbits) emit(stem, orbit_table(o));
  for (const auto& [stem, f] : r.frames) emit(stem, frame_table(f));
  return names;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

struct Globals {
  double rtol = 1e-10;
  double atol = 1e-12;
  std::string out = "nhlab-out";
  std::string format = "csv";
  bool seedless = false;
};

struct Context {
  IntegratorConfig cfg;
  TableFormat fmt = TableFormat::csv;
  OutputSet* files = nullptr;
  json config;
  std::ostream* out = nullptr;
};

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json type_number_summary(const TypeNumberEstimate& e) {
  json j;
  j["nu_tail"] = e.nu_tail;
  j["sigma_tail"] = optional_json(e.sigma_tail);
  j["sigma_flagged"] = std::count_if(e.samples.begin(), e.samples.end(), [](auto& s) { return !s.sigma; });
  j["frame_invariant"] = e.frame_invariant;
  j["normally_hyperbolic"] = e.normally_hyperbolic();
  return j;
}

json cycle_json(const LimitCycleSolution& c) {
  return {{"label", c.label}, {"c", c.c},           {"anchor", {c.anchor[0], c.anchor[1]}},
          {"T", c.period},    {"m", c.multiplier},  {"lambda", c.lambda},
          {"stability", to_string(c.stability)}};
}

json fold_json(const FoldReport& r) {
  json j;
  j["fold_present"] = r.fold_present;
  j["sign_reversals"] = r.sign_reversals;
  j["min_dtheta_ds"] = r.min_dtheta_ds;
  j["folds"] = json::array();
  for (const auto& f : r.folds) {
    j["folds"].push_back({{"s", f.s}, {"a", f.a}, {"theta", f.theta}, {"theta_mod_2pi", std::fmod(std::fmod(f.theta, kTwoPi) + kTwoPi, kTwoPi)}});
  }
  return j;
}

std::string num(double v) { return format_double(v); }

std::string pi_stem(double multiple) { return num(multiple) + "pi"; }

std::vector<double> times_pi(const std::vector<double>& m) {
  std::vector<double> z;
  for (double v : m) z.push_back(v * kPi);
  return z;
}

std::optional<std::pair<double, double>> window_around_pi(double half) {
  if (half <= 0.0) return std::nullopt;
  return std::make_pair(kPi - half, kPi + half);
}

Vec to_vec(const std::vector<double>& v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
  return x;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"nhlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized Lyapunov-type numbers and normal-hyperbolicity breakdown examples", "nhlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Globals g;
  app.add_option("--rtol", g.rtol, "relative integration tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--atol", g.atol, "absolute integration tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--format", g.format, "table format")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--seedless", g.seedless, "no-op: nothing here draws random numbers")->disable_flag_override();
  app.fallthrough();

  std::function<void(Context&)> action;

  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc) {
    auto* sc = parent->add_subcommand(name, desc);
    sc->fallthrough();
    return sc;
  };

  // ex1 ---------------------------------------------------------------------
  auto* ex1 = app.add_subcommand("ex1", "circle losing normal hyperbolicity")->require_subcommand(1);
  ex1->fallthrough();
  double ex1_beta = 1.0, ex1_theta = 0.0;
  std::optional<double> ex1_tmax;
  {
    auto* sc = leaf(ex1, "type-numbers", "nu and sigma on the circle a = 0");
    sc->add_option("--beta", ex1_beta)->capture_default_str();
    sc->add_option("--theta", ex1_theta, "phase of the base point")->capture_default_str();
    sc->add_option("--tmax", ex1_tmax, "last grid time (default: ten periods)");
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto sys = make_system("example1", ex1_beta);
        const auto grid = example1_grid(ex1_beta, ex1_tmax);
        const auto est = estimate_type_numbers(sys, make_frame(ManifoldKind::circle_ex1),
                                               Eigen::Vector2d(0.0, ex1_theta), grid, ctx.cfg);
        ctx.config["beta"] = ex1_beta;
        ctx.config["theta"] = ex1_theta;
        ctx.config["grid"] = {{"spacing", grid.front()}, {"count", grid.size()}};
        ctx.files->write_table("type_numbers", type_number_table(est), ctx.fmt);
        json s = type_number_summary(est);
        ctx.files->write_json("type_numbers_summary.json", s);
        *ctx.out << "nu_tail=" << num(est.nu_tail)
                 << " sigma_tail=" << (est.sigma_tail ? num(*est.sigma_tail) : "undefined")
                 << " normally_hyperbolic=" << (est.normally_hyperbolic() ? "true" : "false") << "\n";
      };
    });
  }

  // ex2 ---------------------------------------------------------------------
  auto* ex2 = app.add_subcommand("ex2", "limit cycles and their bifurcations")->require_subcommand(1);
  ex2->fallthrough();
  double eq_c = -0.06;
  std::string br_label = "gamma3", br_dir = "both";
  std::optional<double> br_c;
  ContinuationOptions copts;
  {
    auto* sc = leaf(ex2, "equilibria", "equilibria in the box |x|, |y| <= 3");
    sc->add_option("--c", eq_c)->capture_default_str();
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto sys = make_system("example2", eq_c);
        const auto eqs = find_equilibria(sys, sys.domain);
        ctx.config["c"] = eq_c;
        Table t{{"x", "y", "c", "kind", "eig1_re", "eig1_im", "eig2_re", "eig2_im"}, {}};
        for (const auto& e : eqs) {
          t.add({e.state[0], e.state[1], e.c, to_string(e.kind), e.eigenvalues[0].real(), e.eigenvalues[0].imag(),
                 e.eigenvalues[1].real(), e.eigenvalues[1].imag()});
        }
        ctx.files->write_table("equilibria", t, ctx.fmt);
        *ctx.out << eqs.size() << " equilibria at c=" << num(eq_c) << "\n";
      };
    });
  }
  auto add_branch_opts = [&](CLI::App* sc) {
    sc->add_option("--t-cap", copts.t_cap, "period cap for the homoclinic stop")->capture_default_str();
    sc->add_option("--d-min", copts.d_min, "saddle distance for the homoclinic stop")->capture_default_str();
  };
  {
    auto* sc = leaf(ex2, "branch", "continue one labelled cycle family");
    sc->add_option("--label", br_label)->capture_default_str()->check(CLI::IsMember({"gamma3", "gamma4", "gamma5"}));
    sc->add_option("--c", br_c, "seed parameter (default per label)");
    sc->add_option("--direction", br_dir)->capture_default_str()->check(CLI::IsMember({"both", "up", "down"}));
    add_branch_opts(sc);
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto seed = seed_example2_cycle(br_label, br_c, ctx.cfg);
        const auto sys = make_system("example2", seed.c);
        ContinuationBranch up, down;
        if (br_dir != "down") up = continue_branch(sys, seed, +1, copts, ctx.cfg);
        if (br_dir != "up") down = continue_branch(sys, seed, -1, copts, ctx.cfg);
        ContinuationBranch b = br_dir == "up" ? up : br_dir == "down" ? down : join_branches(down, up);
        b.label = br_label;
        ctx.config["label"] = br_label;
        ctx.config["seed_c"] = seed.c;
        ctx.config["direction"] = br_dir;
        ctx.config["t_cap"] = copts.t_cap;
        ctx.config["d_min"] = copts.d_min;
        FigureResults r;
        r.branches.emplace_back("branch_" + br_label, b);
        export_figure_data(r, *ctx.files, ctx.fmt);
        json s;
        s["seed"] = cycle_json(seed);
        s["points"] = b.points.size();
        s["termination_up"] = to_string(up.termination);
        s["termination_down"] = to_string(down.termination);
        ctx.files->write_json("branch_" + br_label + "_summary.json", s);
        *ctx.out << br_label << ": " << b.points.size() << " points\n";
      };
    });
  }
  {
    auto* sc = leaf(ex2, "bifurcations", "c1, c2, c3 and the Floquet limit along gamma3");
    add_branch_opts(sc);
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto r = run_example2_bifurcations(ctx.cfg, copts);
        ctx.config["t_cap"] = copts.t_cap;
        ctx.config["d_min"] = copts.d_min;
        FigureResults fr;
        fr.branches.emplace_back("branch_gamma3", join_branches(r.gamma3_down, r.gamma3_up));
        fr.branches.emplace_back("branch_gamma5", r.gamma5_up);
        export_figure_data(fr, *ctx.files, ctx.fmt);

        json s;
        s["c1"] = r.c1.c;
        s["c2"] = r.c2.c2;
        s["c3"] = r.c3.c;
        s["c1_bracket"] = {r.c1.c_lo, r.c1.c_hi};
        s["c3_bracket"] = {r.c3.c_lo, r.c3.c_hi};
        s["fold_multiplier_c1"] = r.c1.multiplier;
        s["fold_multiplier_c3"] = r.c3.multiplier;
        s["homoclinic_fit"] = {{"A", r.c2.A},
                               {"B", r.c2.B},
                               {"relative_residual", r.c2.relative_residual},
                               {"points", r.c2.points_used},
                               {"low_confidence", r.c2.low_confidence}};
        s["gap_c2_c1"] = r.c2.c2 - r.c1.c;
        s["gap_c3_c2"] = r.c3.c - r.c2.c2;
        s["floquet"] = {{"lambda_max_stable", r.floquet.lambda_max},
                        {"lambda_last", r.floquet.lambda_last},
                        {"period_last", r.floquet.period_last},
                        {"limit_exp_minus_half_minus_c2", r.floquet.limit},
                        {"bound_exp_minus_0.4", r.floquet.bound},
                        {"extrapolated_limit", r.floquet.extrapolated_limit}};
        s["seeds"] = {cycle_json(r.gamma3_seed), cycle_json(r.gamma5_seed)};
        ctx.files->write_json("bifurcations.json", s);
        *ctx.out << "c1=" << num(r.c1.c) << " c2=" << num(r.c2.c2) << " c3=" << num(r.c3.c)
                 << " lambda_last=" << num(r.floquet.lambda_last) << "\n";
      };
    });
  }

  // ex3 ---------------------------------------------------------------------
  auto* ex3 = app.add_subcommand("ex3", "invariant torus and normal-bundle rotation")->require_subcommand(1);
  ex3->fallthrough();
  double sw_beta = 0.65, sw_zeta0 = 0.01, win_half = 1.0;
  int sw_samples = 256, img_samples = 512;
  std::vector<double> sw_targets{0.125, 0.25, 0.375, 0.5, 0.89, 0.9, 0.91, 0.92};
  double img_beta = 1.0;
  std::vector<double> img_targets{0.89, 0.9, 0.91, 0.92};
  {
    auto* sc = leaf(ex3, "sweep", "section curves of the invariant set from a circle near Gamma");
    sc->add_option("--beta", sw_beta)->capture_default_str();
    sc->add_option("--zeta0", sw_zeta0)->capture_default_str();
    sc->add_option("--zeta-pi", sw_targets, "section values as multiples of pi")->delimiter(',')->capture_default_str();
    sc->add_option("--samples", sw_samples)->capture_default_str();
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto curves = sweep_invariant_set(sw_beta, sw_zeta0, times_pi(sw_targets), sw_samples, ctx.cfg);
        ctx.config["beta"] = sw_beta;
        ctx.config["zeta0"] = sw_zeta0;
        ctx.config["zeta_pi"] = sw_targets;
        ctx.config["samples"] = sw_samples;
        FigureResults fr;
        json s = json::array();
        for (std::size_t i = 0; i < curves.size(); ++i) {
          const std::string stem = "sweep_beta_" + num(sw_beta) + "_zeta_" + pi_stem(sw_targets[i]);
          fr.curves.emplace_back(stem, curves[i]);
          json e{{"file_stem", stem}, {"zeta", curves[i].zeta}, {"failed", curves[i].failed.size()}};
          e["fold"] = fold_json(detect_fold(curves[i], std::nullopt, ctx.cfg));
          if (curves[i].zeta <= kPi / 2) e["lemma_violation"] = check_lemma_bound({curves[i]});
          s.push_back(e);
        }
        export_figure_data(fr, *ctx.files, ctx.fmt);
        ctx.files->write_json("sweep_summary.json", s);
        *ctx.out << curves.size() << " section curves at beta=" << num(sw_beta) << "\n";
      };
    });
  }
  {
    auto* sc = leaf(ex3, "image-l", "boundary curves of the transported set L");
    sc->add_option("--beta", img_beta)->capture_default_str();
    sc->add_option("--zeta-pi", img_targets, "section values as multiples of pi")->delimiter(',')->capture_default_str();
    sc->add_option("--samples", img_samples)->capture_default_str();
    sc->add_option("--window", win_half, "fold window half-width around theta = pi (0: whole curve)")
        ->capture_default_str();
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto curves = image_of_L(img_beta, times_pi(img_targets), img_samples, ctx.cfg);
        ctx.config["beta"] = img_beta;
        ctx.config["zeta_pi"] = img_targets;
        ctx.config["samples"] = img_samples;
        ctx.config["window"] = win_half;
        FigureResults fr;
        json s = json::array();
        for (std::size_t i = 0; i < curves.size(); ++i) {
          const std::string stem =
              "image_l_beta_" + num(img_beta) + "_zeta_" + pi_stem(img_targets[i / 2]) + "_" + curves[i].boundary;
          fr.curves.emplace_back(stem, curves[i]);
          json e{{"file_stem", stem}, {"zeta", curves[i].zeta}, {"boundary", curves[i].boundary}};
          e["fold"] = fold_json(detect_fold(curves[i], window_around_pi(win_half), ctx.cfg));
          s.push_back(e);
        }
        export_figure_data(fr, *ctx.files, ctx.fmt);
        ctx.files->write_json("image_l_summary.json", s);
        *ctx.out << curves.size() << " boundary curves at beta=" << num(img_beta) << "\n";
      };
    });
  }
  std::string fold_source = "image-l";
  double fold_beta = 1.0, fold_zeta = 0.92;
  int fold_samples = 512;
  {
    auto* sc = leaf(ex3, "fold", "fold test on one section curve");
    sc->add_option("--beta", fold_beta)->capture_default_str();
    sc->add_option("--source", fold_source)->capture_default_str()->check(CLI::IsMember({"image-l", "sweep"}));
    sc->add_option("--zeta-pi", fold_zeta)->capture_default_str();
    sc->add_option("--samples", fold_samples)->capture_default_str();
    sc->add_option("--zeta0", sw_zeta0, "start of the sweep")->capture_default_str();
    sc->add_option("--window", win_half)->capture_default_str();
    sc->callback([&] {
      action = [&](Context& ctx) {
        const std::vector<double> target{fold_zeta * kPi};
        const auto curves = fold_source == "sweep" ? sweep_invariant_set(fold_beta, sw_zeta0, target, fold_samples, ctx.cfg)
                                                   : image_of_L(fold_beta, target, fold_samples, ctx.cfg);
        ctx.config["beta"] = fold_beta;
        ctx.config["source"] = fold_source;
        ctx.config["zeta_pi"] = fold_zeta;
        ctx.config["samples"] = fold_samples;
        ctx.config["window"] = win_half;
        json s = json::array();
        bool any = false;
        for (const auto& c : curves) {
          const auto rep = detect_fold(c, window_around_pi(win_half), ctx.cfg);
          any = any || rep.fold_present;
          json e = fold_json(rep);
          e["boundary"] = c.boundary;
          s.push_back(e);
        }
        ctx.files->write_json("fold.json", s);
        *ctx.out << "fold_present=" << (any ? "true" : "false") << "\n";
      };
    });
  }
  double bc_lo = 0.65, bc_hi = 1.0, bc_tol = 1e-4;
  {
    auto* sc = leaf(ex3, "beta-c", "critical beta from the winding of the bundle angle");
    sc->add_option("--lo", bc_lo)->capture_default_str();
    sc->add_option("--hi", bc_hi)->capture_default_str();
    sc->add_option("--tol", bc_tol)->capture_default_str();
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto bc = bisect_beta_c(bc_lo, bc_hi, bc_tol, ctx.cfg);
        const auto readout = critical_terminal_alpha(bc, 1e-13, 1e-2, ctx.cfg);
        ctx.config["lo"] = bc_lo;
        ctx.config["hi"] = bc_hi;
        ctx.config["tol"] = bc_tol;
        FigureResults fr;
        for (double b : {bc_lo, bc.estimate, bc_hi}) {
          fr.orbits.emplace_back("bundle_orbit_beta_" + num(b), unstable_branch_orbit(b, ctx.cfg));
        }
        export_figure_data(fr, *ctx.files, ctx.fmt);
        json s;
        s["beta_c"] = bc.estimate;
        s["bracket"] = {bc.lo, bc.hi};
        s["w_alpha_lo"] = bc.w_lo;
        s["w_alpha_hi"] = bc.w_hi;
        s["evaluations"] = bc.evaluations;
        s["orbits"] = json::array();
        for (const auto& [stem, o] : fr.orbits) {
          s["orbits"].push_back({{"beta", o.beta},
                                 {"w_alpha", o.w_alpha},
                                 {"w_zeta", o.w_zeta},
                                 {"terminal_alpha", o.terminal_alpha},
                                 {"terminal_class", to_string(o.terminal)}});
        }
        s["separatrix"] = {{"bracket", {readout.beta_lo, readout.beta_hi}},
                           {"zeta_split", readout.zeta_split},
                           {"alpha", readout.alpha},
                           {"terminal_class", to_string(readout.terminal)}};
        ctx.files->write_json("beta_c.json", s);
        *ctx.out << "beta_c=" << num(bc.estimate) << " bracket=[" << num(bc.lo) << ", " << num(bc.hi) << "]\n";
      };
    });
  }
  double bf_beta = 0.65;
  int bf_points = 64;
  {
    auto* sc = leaf(ex3, "bundle-frame", "fiber vectors of the invariant normal subbundle along E");
    sc->add_option("--beta", bf_beta)->capture_default_str();
    sc->add_option("--points", bf_points, "grid zeta_k = pi (k + 1/2) / points")->capture_default_str()->check(
        CLI::PositiveNumber);
    sc->callback([&] {
      action = [&](Context& ctx) {
        std::vector<double> grid;
        for (int k = 0; k < bf_points; ++k) grid.push_back(kPi * (k + 0.5) / bf_points);
        ctx.config["beta"] = bf_beta;
        ctx.config["points"] = bf_points;
        FigureResults fr;
        fr.frames.emplace_back("bundle_frame_beta_" + num(bf_beta), bundle_frame_vectors(bf_beta, grid, ctx.cfg));
        fr.orbits.emplace_back("bundle_orbit_beta_" + num(bf_beta), unstable_branch_orbit(bf_beta, ctx.cfg));
        export_figure_data(fr, *ctx.files, ctx.fmt);
        *ctx.out << bf_points << " fiber vectors at beta=" << num(bf_beta) << "\n";
      };
    });
  }

  // lyapunov ----------------------------------------------------------------
  auto* lyap = app.add_subcommand("lyapunov", "type numbers on builtin invariant sets")->require_subcommand(1);
  lyap->fallthrough();
  std::string ly_system = "example1", ly_manifold = "circle-ex1";
  double ly_param = 1.0;
  std::vector<double> ly_point{0.0, 0.0};
  std::optional<double> ly_spacing;
  int ly_count = 10;
  {
    auto* sc = leaf(lyap, "estimate", "nu and sigma at one point of an invariant set");
    sc->add_option("--system", ly_system)->capture_default_str();
    sc->add_option("--param", ly_param)->capture_default_str();
    sc->add_option("--manifold", ly_manifold, "circle-ex1, circle-ex3, torus-ex3-at-gamma or cycle")
        ->capture_default_str();
    sc->add_option("--point", ly_point, "base point (cycle: seed near the section)")->delimiter(',')->capture_default_str();
    sc->add_option("--spacing", ly_spacing, "grid spacing (default: 1, or the period for cycles)");
    sc->add_option("--count", ly_count)->capture_default_str()->check(CLI::PositiveNumber);
    sc->callback([&] {
      action = [&](Context& ctx) {
        const auto sys = make_system(ly_system, ly_param);
        ctx.config["system"] = ly_system;
        ctx.config["param"] = ly_param;
        ctx.config["manifold"] = ly_manifold;
        ctx.config["point"] = ly_point;
        ctx.config["count"] = ly_count;
        json s;
        TypeNumberEstimate est;
        if (ly_manifold == "cycle") {
          if (ly_system != "example2") throw std::invalid_argument("cycle frames are available for example2 only");
          const Vec guess = to_vec(ly_point);
          LimitCycleSolution cyc;
          try {
            cyc = refine_cycle(sys, guess, ctx.cfg);
          } catch (const NumericalFailure&) {
            // a repelling cycle is only reachable backward
            cyc = refine_cycle(sys, settle_on_section(sys, guess, -200.0, ctx.cfg, example2_cycle_options()), ctx.cfg);
          }
          const auto tn = cycle_type_numbers(cyc, ly_count, ctx.cfg);
          est = tn.forward;
          s = type_number_summary(est);
          s["cycle"] = cycle_json(cyc);
          s["floquet_lambda"] = tn.rates.lambda;
          s["reversed"] = type_number_summary(tn.reversed);
          ctx.config["spacing"] = cyc.period;
        } else {
          const auto frame = make_frame(parse_manifold_kind(ly_manifold));
          const double spacing = ly_spacing.value_or(1.0);
          ctx.config["spacing"] = spacing;
          est = estimate_type_numbers(sys, frame, to_vec(ly_point), uniform_grid(spacing, ly_count), ctx.cfg);
          s = type_number_summary(est);
        }
        ctx.files->write_table("type_numbers", type_number_table(est), ctx.fmt);
        ctx.files->write_json("type_numbers_summary.json", s);
        *ctx.out << "nu_tail=" << num(est.nu_tail)
                 << " sigma_tail=" << (est.sigma_tail ? num(*est.sigma_tail) : "undefined") << "\n";
      };
    });
  }

  // CLI11 lets "--flag=<default>" through even with overrides disabled
  for (int i = 1; i < argc; ++i) {
    if (std::string_view(argv[i]).starts_with("--seedless=")) {
      err << "nhlab: --seedless takes no value\n";
      return kUsageError;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "nhlab: " << e.what() << "\n";
    return kUsageError;
  }
  if (!action) {
    err << "nhlab: no command given\n";
    return kUsageError;
  }

  Context ctx;
  ctx.cfg.rel_tol = g.rtol;
  ctx.cfg.abs_tol = g.atol;
  ctx.fmt = g.format == "json" ? TableFormat::json : TableFormat::csv;
  ctx.out = &out;
  std::string command;
  for (const auto* group : app.get_subcommands()) {
    for (const auto* sub : group->get_subcommands()) command = group->get_name() + " " + sub->get_name();
  }
  ctx.config["command"] = command;
  ctx.config["rtol"] = g.rtol;
  ctx.config["atol"] = g.atol;
  ctx.config["format"] = g.format;

  std::optional<OutputSet> files;
  try {
    ctx.cfg.validate();
    files.emplace(g.out);
    ctx.files = &*files;
    action(ctx);
    files->finish(kVersion, ctx.config);
    return kSuccess;
  } catch (const NumericalFailure& e) {
    err << "nhlab: numerical failure: " << e.what() << "\n";
    if (files) {
      try {
        files->write_json("diagnostics.json", json{{"error", "numerical failure"}, {"message", e.what()}});
        files->finish(kVersion, ctx.config);
      } catch (const std::exception&) {
      }
    }
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "nhlab: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::out_of_range& e) {
    err << "nhlab: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::domain_error& e) {
    err << "nhlab: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "nhlab: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace nhlab::cli
