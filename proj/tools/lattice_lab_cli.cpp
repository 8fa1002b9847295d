// lattice-lab: command-line front end for the experiments and tables.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lattice_lab/io.hpp"

using namespace lattice_lab;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  int threads = 1;
};

struct Output {
  Table table{{}};
  Json summary = Json::object();
};

std::uint64_t need_seed(const Globals& g, const std::string& cmd) {
  if (!g.seed) throw CLI::ValidationError("--seed", "--seed is required for " + cmd);
  return *g.seed;
}

std::vector<double> grid(double from, double to, double step) {
  if (!(step > 0.0) || to < from) throw ValidationError("grid needs step > 0 and to >= from");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(from + step * static_cast<double>(i));
  return out;
}

Json string_list(const std::vector<std::string>& xs) { return Json(xs); }

std::pair<double, double> parse_pair(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ValidationError("expected 'a,b', got '" + s + "'");
  return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
}

void emit(const Globals& g, const std::string& cmd, const Output& o) {
  std::ofstream file;
  if (!g.out.empty()) {
    file.open(g.out);
    if (!file) throw std::runtime_error("cannot open " + g.out);
  }
  std::ostream& os = g.out.empty() ? std::cout : file;
  if (g.format == "json") {
    Json doc{{"subcommand", cmd}, {"summary", o.summary}, {"rows", o.table.to_json()}};
    if (g.seed) doc["seed"] = *g.seed;
    os << doc.dump(2) << '\n';
  } else {
    o.table.write_csv(os);
    for (const auto& [key, value] : o.summary.items()) std::cerr << key << ": " << value.dump() << '\n';
  }
}

/// Expands "--config file.json" into the equivalent arguments; explicit
/// command-line arguments follow and take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> rest;
  std::vector<std::string> from_config;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" || a.rfind("--config=", 0) == 0) {
      std::string path = a == "--config" ? (i + 1 < argc ? argv[++i] : "") : a.substr(9);
      std::ifstream in(path);
      if (!in) throw ValidationError("cannot read config file '" + path + "'");
      from_config = ExperimentConfig::from_json(Json::parse(in)).to_args();
    } else {
      rest.push_back(a);
    }
  }
  if (from_config.empty()) return rest;
  // Subcommand words from the command line replace those of the config.
  std::vector<std::string> out = from_config;
  for (const auto& a : rest) out.push_back(a);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lattice-lab: unimodular lattices, diagonal flows and Diophantine approximation experiments"};
  app.name("lattice-lab");
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Globals g;
  app.add_option("--seed", g.seed, "master seed (u64); required by stochastic subcommands");
  app.add_option("--out", g.out, "output path (default stdout)");
  app.add_option("--format", g.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file {\"subcommand\": ..., \"<option>\": value, ...}");

  Output out;
  std::string ran;
  auto take_all = [](CLI::Option* o) { return o->multi_option_policy(CLI::MultiOptionPolicy::TakeAll); };

  // bc-count -------------------------------------------------------------
  auto* bc = app.add_subcommand("bc-count",
                                "shrinking-target counts. CSV: N,S_N,E_N,ratio,residual,sampler; with --replicates: "
                                "seed,S_N,E_N,ratio,ratio_min_final_decade,ratio_max_final_decade,final_decade_increment,warning");
  BCCountConfig bc_cfg;
  std::string bc_norm = "sup", bc_tail = "analytic";
  std::size_t bc_reps = 1, bc_tail_samples = 100000;
  bc->add_option("--flow", bc_cfg.flow, "m:n or exponent list")->capture_default_str();
  bc->add_option("--rate", bc_cfg.rate, "const:v= | log:c= | linear:s= | psi:<spec>")->capture_default_str();
  bc->add_option("--horizon", bc_cfg.horizon, "N")->capture_default_str();
  bc->add_option("--norm", bc_norm, "sup | euclidean")->capture_default_str();
  bc->add_option("--replicates", bc_reps, "independent seeds")->capture_default_str();
  bc->add_option("--tail", bc_tail, "analytic | mc")->check(CLI::IsMember({"analytic", "mc"}))->capture_default_str();
  bc->add_option("--tail-samples", bc_tail_samples, "samples for --tail mc")->capture_default_str();
  bc->callback([&] {
    ran = "bc-count";
    const auto seed = need_seed(g, ran);
    bc_cfg.norm = parse_norm_kind(bc_norm);
    if (bc_tail == "mc") {
      const int k = parse_flow(bc_cfg.flow).dim();
      bc_cfg.tail = tail_distribution(LatticeSampler::standard(k, replicate_seed(seed, 1u << 20)), grid(0.0, 4.0, 0.125),
                                      bc_tail_samples, g.threads, bc_cfg.norm);
    }
    if (bc_reps <= 1) {
      bc_cfg.seed = seed;
      const auto rep = bc_count(bc_cfg);
      out.table = bc_table(rep);
      out.summary = {{"S_N", rep.s_final},
                     {"E_N", rep.e_final},
                     {"ratio", rep.ratio_final},
                     {"ratio_min_final_decade", rep.ratio_min_final_decade},
                     {"ratio_max_final_decade", rep.ratio_max_final_decade},
                     {"final_decade_increment", rep.final_decade_increment},
                     {"tail_model", rep.tail_model},
                     {"sampler", rep.sampler},
                     {"warnings", string_list(rep.warnings)}};
      return;
    }
    const auto reps = parallel_map(bc_reps, g.threads, [&](std::size_t i) {
      auto c = bc_cfg;
      c.seed = replicate_seed(seed, i);
      return std::pair{c.seed, bc_count(c)};
    });
    out.table = Table({"seed", "S_N", "E_N", "ratio", "ratio_min_final_decade", "ratio_max_final_decade",
                       "final_decade_increment", "warning"});
    std::vector<double> ratios;
    for (const auto& [s, r] : reps) {
      out.table.add({std::to_string(s), static_cast<std::int64_t>(r.s_final), r.e_final, r.ratio_final,
                     r.ratio_min_final_decade, r.ratio_max_final_decade, static_cast<std::int64_t>(r.final_decade_increment),
                     r.warnings.empty() ? std::string() : r.warnings.front()});
      ratios.push_back(r.ratio_final);
    }
    out.summary = {{"median_ratio", detail::median_of(ratios)}, {"replicates", bc_reps},
                   {"sampler", reps.front().second.sampler}};
  });

  // bc-variance ----------------------------------------------------------
  auto* bv = app.add_subcommand("bc-variance", "variance of window sums (k = 2). CSV: M,N,mean_sum,variance,sum_mu,ratio,shuffled,sampler");
  BCVarianceConfig bv_cfg;
  std::vector<std::string> bv_windows;
  bv->add_option("--rate", bv_cfg.rate)->capture_default_str();
  take_all(bv->add_option("--window", bv_windows, "M:N (repeatable; default 1:100 and 100:1000)"));
  bv->add_option("--samples", bv_cfg.samples)->capture_default_str();
  bv->add_flag("--shuffle", bv_cfg.shuffle, "permute thresholds within each window");
  bv->callback([&] {
    ran = "bc-variance";
    bv_cfg.seed = need_seed(g, ran);
    bv_cfg.threads = g.threads;
    if (!bv_windows.empty()) {
      bv_cfg.windows.clear();
      for (const auto& w : bv_windows) {
        const auto colon = w.find(':');
        if (colon == std::string::npos) throw ValidationError("window must be M:N");
        bv_cfg.windows.emplace_back(std::stol(w.substr(0, colon)), std::stol(w.substr(colon + 1)));
      }
    }
    const auto rep = bc_variance_probe(bv_cfg);
    out.table = bc_variance_table(rep);
    out.summary = {{"max_ratio", rep.max_ratio}, {"sampler", rep.sampler}};
  });

  // loglaw ---------------------------------------------------------------
  auto* ll = app.add_subcommand("loglaw", "running-maximum slope. CSV: T,running_max,sampler; with --replicates: seed,slope,sampler");
  LogLawConfig ll_cfg;
  std::size_t ll_reps = 1;
  std::string ll_norm = "sup";
  ll->add_option("--flow", ll_cfg.flow)->capture_default_str();
  ll->add_option("--horizon", ll_cfg.horizon)->capture_default_str();
  ll->add_option("--fit-from", ll_cfg.fit_from)->capture_default_str();
  ll->add_option("--fit-points", ll_cfg.fit_points)->capture_default_str();
  ll->add_option("--norm", ll_norm)->capture_default_str();
  ll->add_option("--replicates", ll_reps)->capture_default_str();
  ll->callback([&] {
    ran = "loglaw";
    const auto seed = need_seed(g, ran);
    ll_cfg.norm = parse_norm_kind(ll_norm);
    if (ll_reps <= 1) {
      ll_cfg.seed = seed;
      const auto rep = loglaw(ll_cfg);
      out.table = loglaw_table(rep);
      out.summary = {{"slope", rep.slope}, {"target", rep.target}, {"sampler", rep.sampler}};
      return;
    }
    const auto reps = parallel_map(ll_reps, g.threads, [&](std::size_t i) {
      auto c = ll_cfg;
      c.seed = replicate_seed(seed, i);
      return std::pair{c.seed, loglaw(c)};
    });
    out.table = Table({"seed", "slope", "sampler"});
    std::size_t in_band = 0;
    for (const auto& [s, r] : reps) {
      out.table.add({std::to_string(s), r.slope, r.sampler});
      in_band += r.slope >= 0.35 && r.slope <= 0.65;
    }
    out.summary = {{"fraction_in_0.35_0.65", static_cast<double>(in_band) / static_cast<double>(ll_reps)},
                   {"target", reps.front().second.target}};
  });

  // khinchin -------------------------------------------------------------
  auto* kh = app.add_subcommand("khinchin", "psi-approximation counts of random A. CSV: Q,mean_count");
  KhinchinConfig kh_cfg;
  std::vector<double> kh_alpha;
  kh->add_option("--m", kh_cfg.m)->capture_default_str();
  kh->add_option("--n", kh_cfg.n)->capture_default_str();
  kh->add_option("--psi", kh_cfg.psi)->capture_default_str();
  kh->add_option("--qmax", kh_cfg.qmax)->capture_default_str();
  kh->add_option("--samples", kh_cfg.samples)->capture_default_str();
  take_all(kh->add_option("--alpha", kh_alpha, "fixed A, m*n entries row-major (repeatable)"));
  kh->callback([&] {
    ran = "khinchin";
    kh_cfg.seed = need_seed(g, ran);
    kh_cfg.threads = g.threads;
    if (!kh_alpha.empty()) {
      if (kh_alpha.size() != static_cast<std::size_t>(kh_cfg.m * kh_cfg.n)) throw ValidationError("--alpha needs m*n values");
      Matrix a(kh_cfg.m, kh_cfg.n);
      for (int i = 0; i < kh_cfg.m; ++i)
        for (int j = 0; j < kh_cfg.n; ++j) a(i, j) = kh_alpha[static_cast<std::size_t>(i * kh_cfg.n + j)];
      kh_cfg.fixed_a = a;
    }
    const auto rep = khinchin(kh_cfg);
    out.table = khinchin_table(rep);
    out.summary = {{"mean_count", rep.mean_count},
                   {"predicted", rep.predicted},
                   {"two_log_qmax", rep.two_log_qmax},
                   {"mean_final_decade_increment", rep.mean_final_decade_increment},
                   {"mean_exact_zero", rep.mean_exact_zero}};
  });

  // skriganov ------------------------------------------------------------
  auto* sk = app.add_subcommand("skriganov",
                                "multiplicative witness counts along a radius ladder. CSV: q,R,median_count,growth_fraction,"
                                "stagnation_fraction,sampler");
  SkriganovConfig sk_cfg;
  std::vector<double> sk_q, sk_ladder;
  sk->add_option("--k", sk_cfg.k)->capture_default_str();
  take_all(sk->add_option("--q", sk_q, "exponents q (repeatable; default 0.5 and 2)"));
  take_all(sk->add_option("--ladder", sk_ladder, "radii (repeatable; default 100 1000 5000 10000)"));
  sk->add_option("--samples", sk_cfg.samples)->capture_default_str();
  sk->add_flag("--integer", sk_cfg.integer_control, "use Z^k instead of random lattices");
  sk->callback([&] {
    ran = "skriganov";
    sk_cfg.seed = need_seed(g, ran);
    sk_cfg.threads = g.threads;
    if (!sk_q.empty()) sk_cfg.qs = sk_q;
    if (!sk_ladder.empty()) sk_cfg.ladder = sk_ladder;
    const auto rep = skriganov(sk_cfg);
    out.table = skriganov_table(rep);
    out.summary = {{"sampler", rep.sampler}};
  });

  // mixing-probe ---------------------------------------------------------
  auto* mx = app.add_subcommand("mixing-probe", "qualitative decay of correlations (k = 2). CSV: t,abs_covariance,sampler,note");
  MixingConfig mx_cfg;
  std::vector<double> mx_times;
  std::string phi_c = "0.3,0.3", psi_c = "0.3,0.3";
  take_all(mx->add_option("--times", mx_times, "times (repeatable; default 0 1 2 4 8)"));
  mx->add_option("--samples", mx_cfg.samples)->capture_default_str();
  mx->add_option("--bandwidth", mx_cfg.bandwidth)->capture_default_str();
  mx->add_option("--phi-centre", phi_c, "Delta,log y")->capture_default_str();
  mx->add_option("--psi-centre", psi_c, "Delta,log y")->capture_default_str();
  mx->add_flag("--phi-constant", mx_cfg.phi.constant);
  mx->add_flag("--psi-constant", mx_cfg.psi.constant);
  mx->callback([&] {
    ran = "mixing-probe";
    mx_cfg.seed = need_seed(g, ran);
    mx_cfg.threads = g.threads;
    if (!mx_times.empty()) mx_cfg.times = mx_times;
    std::tie(mx_cfg.phi.delta_centre, mx_cfg.phi.logy_centre) = parse_pair(phi_c);
    std::tie(mx_cfg.psi.delta_centre, mx_cfg.psi.logy_centre) = parse_pair(psi_c);
    const auto rep = mixing_probe(mx_cfg);
    out.table = mixing_table(rep);
    out.summary = {{"decay_rate", std::isfinite(rep.decay_rate) ? Json(rep.decay_rate) : Json(nullptr)},
                   {"note", rep.note}};
  });

  // roots ----------------------------------------------------------------
  auto* roots = app.add_subcommand("roots", "type A root data");
  roots->require_subcommand(1);
  int roots_n = 3;
  double zmax = 20.0, zstep = 0.5;
  auto* rt = roots->add_subcommand("table", "CSV: i,k_i,weight_norm_sq,ratio,closed_form_k");
  rt->add_option("--n", roots_n)->capture_default_str();
  rt->callback([&] {
    ran = "roots table";
    out.table = roots_csv_table(roots_n);
    out.summary = {{"dl_exponent", dl_exponent(roots_n)}};
  });
  auto* rc = roots->add_subcommand("chamber", "CSV: z,J,J_exp_kz");
  rc->add_option("--n", roots_n)->capture_default_str();
  rc->add_option("--zmax", zmax)->capture_default_str();
  rc->add_option("--step", zstep)->capture_default_str();
  rc->callback([&] {
    ran = "roots chamber";
    const double k = dl_exponent(roots_n);
    out.table = Table({"z", "J", "J_exp_kz"});
    for (double z : grid(0.0, zmax, zstep)) {
      const double j = chamber_tail_integral(roots_n, z);
      out.table.add({z, j, j * std::exp(k * z)});
    }
    out.summary = {{"k", k}};
  });

  // siegel ---------------------------------------------------------------
  auto* sg = app.add_subcommand("siegel", "Monte-Carlo mean of primitive counts. CSV: k,radius,mean,std_error,prediction,samples,sampler");
  int sg_k = 2;
  double sg_r = 0.5;
  std::size_t sg_n = 100000;
  std::string sg_mode, sg_norm = "sup";
  bool sg_pairs = false;
  sg->add_option("--k", sg_k)->capture_default_str();
  sg->add_option("--radius", sg_r)->capture_default_str();
  sg->add_option("--samples", sg_n)->capture_default_str();
  sg->add_option("--mode", sg_mode, "exact2 | surrogate (default: exact2 for k = 2)");
  sg->add_option("--norm", sg_norm)->capture_default_str();
  sg->add_flag("--pairs", sg_pairs, "count primitive pairs instead");
  sg->callback([&] {
    ran = "siegel";
    const auto seed = need_seed(g, ran);
    const auto s = sg_mode.empty() ? LatticeSampler::standard(sg_k, seed) : LatticeSampler(sg_k, parse_sampler_mode(sg_mode), seed);
    const auto kind = parse_norm_kind(sg_norm);
    const auto est = sg_pairs ? siegel_pair_mc(s, sg_r, sg_n, g.threads, kind) : siegel_mc(s, sg_r, sg_n, g.threads, kind);
    const double pred = sg_pairs ? siegel_pair_prediction(sg_k, sg_r, kind) : siegel_prediction(sg_k, sg_r, kind);
    out.table = Table({"k", "radius", "mean", "std_error", "prediction", "samples", "sampler"});
    out.table.add({static_cast<std::int64_t>(sg_k), sg_r, est.mean, est.std_error, pred,
                   static_cast<std::int64_t>(est.samples), est.sampler});
    out.summary = {{"sampler_config", sampler_to_json(s)}};
  });

  // tail -----------------------------------------------------------------
  auto* tl = app.add_subcommand("tail", "tail Phi(z) = mu(Delta >= z). CSV: z,phi_hat,ci,upper_bound,lower_bound,hits,scored,sampler");
  int tl_k = 2;
  std::size_t tl_n = 100000;
  double tl_zmax = 3.0, tl_step = 0.25;
  std::optional<double> tl_dl;
  std::string tl_mode;
  tl->add_option("--k", tl_k)->capture_default_str();
  tl->add_option("--samples", tl_n)->capture_default_str();
  tl->add_option("--zmax", tl_zmax)->capture_default_str();
  tl->add_option("--step", tl_step)->capture_default_str();
  tl->add_option("--mode", tl_mode, "exact2 | surrogate");
  tl->add_option("--dl-delta", tl_dl, "also report the distance-like check at this shift");
  tl->callback([&] {
    ran = "tail";
    const auto seed = need_seed(g, ran);
    const auto s = tl_mode.empty() ? LatticeSampler::standard(tl_k, seed) : LatticeSampler(tl_k, parse_sampler_mode(tl_mode), seed);
    const auto est = tail_distribution(s, grid(0.0, tl_zmax, tl_step), tl_n, g.threads);
    out.table = tail_table(est);
    out.summary = {{"sampler_config", sampler_to_json(s)}};
    if (tl_dl) {
      const auto chk = dl_check(est, *tl_dl);
      out.summary["dl_check"] = {{"delta", *tl_dl}, {"c_hat", chk.c_hat}, {"ci", chk.ci}, {"pass", chk.pass}};
    }
  });

  // dani -----------------------------------------------------------------
  auto* dn = app.add_subcommand("dani", "psi <-> rate correspondence. forward CSV: t,r,lambda,L; inverse CSV: lambda,x,neg_log_psi,psi,extrapolated");
  std::string dn_dir = "forward", dn_psi = "power_log:c=1,a=1", dn_rate;
  int dn_m = 1, dn_n = 1;
  double dn_span = 20.0, dn_step = 0.5;
  dn->add_option("--direction", dn_dir)->check(CLI::IsMember({"forward", "inverse"}))->capture_default_str();
  dn->add_option("--psi", dn_psi, "psi spec for forward")->capture_default_str();
  dn->add_option("--rate", dn_rate, "rate spec for inverse");
  dn->add_option("--m", dn_m)->capture_default_str();
  dn->add_option("--n", dn_n)->capture_default_str();
  dn->add_option("--span", dn_span, "table range past t0 (forward) or lambda0 (inverse)")->capture_default_str();
  dn->add_option("--step", dn_step)->capture_default_str();
  dn->callback([&] {
    ran = "dani";
    if (dn_dir == "forward") {
      const auto r = dani_forward(PsiFunction::parse(dn_psi), dn_m, dn_n);
      out.table = rate_table(r, grid(r.t0(), r.t0() + dn_span, dn_step));
      out.summary = {{"t0", r.t0()}, {"rate", r.describe()}};
    } else {
      if (dn_rate.empty()) throw ValidationError("--rate is required for --direction inverse");
      const auto psi = dani_inverse(parse_rate(dn_rate, dn_m, dn_n), dn_m, dn_n);
      out.table = psi_table(psi, grid(psi.lambda0(), psi.lambda0() + dn_span, dn_step));
      out.summary = {{"lambda0", psi.lambda0()}, {"psi", psi.describe()}};
    }
  });

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    emit(g, ran, out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
