#include "latfact/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "latfact/algebra.hpp"
#include "latfact/experiments.hpp"
#include "latfact/oracle.hpp"
#include "latfact/parallel.hpp"

namespace latfact::cli {

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  int workers = 0;  // 0 -> hardware concurrency
  std::string output_dir = ".";

  int resolved_workers() const { return workers > 0 ? workers : default_workers(); }
};

struct Range {
  int lo = 0, hi = 0, step = 1;
};

Range parse_range(const std::string& text) {
  Range r;
  auto first = text.find(':');
  if (first == std::string::npos) {
    r.lo = r.hi = std::stoi(text);
    return r;
  }
  r.lo = std::stoi(text.substr(0, first));
  auto rest = text.substr(first + 1);
  auto second = rest.find(':');
  if (second == std::string::npos) {
    r.hi = std::stoi(rest);
  } else {
    r.hi = std::stoi(rest.substr(0, second));
    r.step = std::stoi(rest.substr(second + 1));
  }
  if (r.step <= 0 || r.hi < r.lo) throw CLI::ValidationError("range", "malformed range: " + text);
  return r;
}

int status_exit_code(FactorStatus status) {
  switch (status) {
    case FactorStatus::success: return exit_ok;
    case FactorStatus::budget_exhausted: return exit_budget_exhausted;
    case FactorStatus::invalid_input:
    case FactorStatus::invalid_even:
    case FactorStatus::invalid_prime:
    case FactorStatus::invalid_perfect_power:
    case FactorStatus::invalid_too_small: return exit_invalid_input;
  }
  return exit_internal;
}

struct RefineOpts {
  std::string n_text;
  int bits = 0;
  int m = 0;
  int c = 4;
  int sweeps = -1;  // -1 -> 50 * m
  double beta_start = 0.05;
  double beta_end = 5.0;
  bool oracle = false;
  bool json = false;
  std::string trace_path;
};

BigInt resolve_n(const std::string& n_text, int bits, std::uint64_t seed) {
  if (!n_text.empty()) return parse_decimal(n_text);
  if (bits < 4) throw CLI::ValidationError("--bits", "provide N or --bits >= 4");
  Rng rng = make_rng(split_seed(seed, 0x5e111));
  return random_semiprime(bits, rng);
}

int cmd_refine(const GlobalOpts& g, const RefineOpts& o, std::ostream& out, std::ostream& err) {
  BigInt n = resolve_n(o.n_text, o.bits, g.seed);
  int bits = static_cast<int>(bit_length(n));
  int m = o.m > 0 ? o.m : std::max(2, (bits + 2) / 3);
  if (mp::integer_modulus(n, 2ul) == 0 || n < 15) {
    err << "refine: N must be odd and >= 15\n";
    return exit_invalid_input;
  }

  Rng rng = make_rng(split_seed(g.seed, 1));
  PrimeLattice lattice = build_prime_lattice(n, m, o.c, rng);
  ReducedBasis reduced = lll_reduce(lattice);
  BabaiResult babai = babai_nearest_plane(reduced, lattice.target);
  RefinementProblem problem = RefinementProblem::from(lattice, reduced, babai);

  int sweeps = o.sweeps >= 0 ? o.sweeps : 50 * m;
  Schedule schedule = Schedule::linear(o.beta_start, o.beta_end, sweeps);
  StopRule stop;
  auto outcome = run_refinement(problem, schedule, stop, split_seed(g.seed, 2),
                                UpdateOrder::sweep, !o.trace_path.empty());

  BigInt d0 = energy(problem, State(static_cast<std::size_t>(m), 0));
  double before = std::sqrt(d0.convert_to<double>());
  double after = std::sqrt(outcome.best_energy.convert_to<double>());
  double improvement = before > 0 ? 100.0 * (before - after) / before : 0.0;

  std::optional<EnumerationReport> oracle_rep;
  if (o.oracle) oracle_rep = enumerate_neighborhood(problem);

  if (!o.trace_path.empty()) {
    std::ofstream tf(o.trace_path);
    write_trace_csv(tf, outcome.trace);
  }

  if (o.json) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n"] = to_decimal(n);
    j["m"] = m;
    j["c"] = o.c;
    j["seed"] = g.seed;
    j["sweeps_budget"] = sweeps;
    j["initial_distance_sq"] = to_decimal(d0);
    j["best_distance_sq"] = to_decimal(outcome.best_energy);
    j["improvement_pct"] = improvement;
    j["sweeps_to_best"] = outcome.first_hit_sweep;
    j["sweeps_run"] = outcome.sweeps_run;
    if (oracle_rep) {
      j["oracle_distance_sq"] = to_decimal(oracle_rep->best_distance_sq);
      j["oracle_match"] = outcome.best_energy == oracle_rep->best_distance_sq;
    }
    out << j.dump(2) << '\n';
  } else {
    out << "N = " << to_decimal(n) << "  m = " << m << "  sweeps = " << sweeps << '\n';
    out << "b_op distance    = " << before << "  (squared " << to_decimal(d0) << ")\n";
    out << "refined distance = " << after << "  (squared " << to_decimal(outcome.best_energy)
        << ")\n";
    out << "improvement      = " << improvement << "%\n";
    out << "sweeps to best   = " << outcome.first_hit_sweep << '\n';
    if (oracle_rep) {
      bool match = outcome.best_energy == oracle_rep->best_distance_sq;
      out << "oracle optimum   = " << std::sqrt(oracle_rep->best_distance_sq.convert_to<double>())
          << "  verdict: " << (match ? "MATCH" : "MISS") << '\n';
    }
  }
  return exit_ok;
}

struct EnumOpts {
  std::string n_text;
  int bits = 0;
  int m = 0;
  int M = 0;
  int c = 4;
  int weight_bound = -1;
  std::string out_path;
  std::string lattice_json_path;
};

int cmd_enumerate(const GlobalOpts& g, const EnumOpts& o, std::ostream& out, std::ostream& err) {
  BigInt n = resolve_n(o.n_text, o.bits, g.seed);
  if (mp::integer_modulus(n, 2ul) == 0 || n < 15) {
    err << "enumerate: N must be odd and >= 15\n";
    return exit_invalid_input;
  }
  int bits = static_cast<int>(bit_length(n));
  int m = o.m > 0 ? o.m : std::max(2, (bits + 2) / 3);
  int M = o.M > 0 ? o.M : m * m;
  FactorBase base = FactorBase::first(static_cast<std::size_t>(M));

  Rng rng = make_rng(split_seed(g.seed, 1));
  PrimeLattice lattice = build_prime_lattice(n, m, o.c, rng);
  ReducedBasis reduced = lll_reduce(lattice);
  BabaiResult babai = babai_nearest_plane(reduced, lattice.target);

  std::optional<int> bound;
  if (o.weight_bound >= 0) bound = o.weight_bound;

  auto rep = enumerate_sr_pairs(lattice, reduced, babai, base, bound, g.resolved_workers());

  std::filesystem::path path = o.out_path.empty()
                                   ? std::filesystem::path(g.output_dir) / "census.csv"
                                   : std::filesystem::path(o.out_path);
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream cf(path);
  write_census_csv(cf, lattice, reduced, babai, base, bound);
  if (!o.lattice_json_path.empty()) {
    std::ofstream lf(o.lattice_json_path);
    lf << lattice_to_json(lattice).dump(2) << '\n';
  }

  out << "N = " << to_decimal(n) << "  m = " << m << "  M = " << M << '\n';
  out << "states visited   = " << rep.states_visited << '\n';
  out << "best distance^2  = " << to_decimal(rep.best_distance_sq) << '\n';
  out << "sr-pairs found   = " << rep.sr_pairs.size() << '\n';
  out << "census csv       = " << path.string() << '\n';
  return exit_ok;
}

struct FactorOpts {
  std::string n_text;
  int m = 0;
  int M = 0;
  int c = 4;
  double beta = 0.66;
  int sweeps_per_m = 20;
  std::size_t budget = 0;
  std::size_t target_relations = 0;
  bool json = false;
  bool paper_scale = false;
  std::string report_path;
  std::string relations_path;
};

int cmd_factor(const GlobalOpts& g, const FactorOpts& o, std::ostream& out, std::ostream& err) {
  BigInt n;
  try {
    n = parse_decimal(o.n_text);
  } catch (const std::invalid_argument& e) {
    err << "factor: " << e.what() << '\n';
    return exit_invalid_input;
  }
  FactorParams params;
  params.campaign.m = o.m;
  params.campaign.M = o.M;
  params.campaign.c = o.c;
  params.campaign.engine.beta = o.beta;
  params.campaign.engine.sweeps_per_m = o.sweeps_per_m;
  params.campaign.lattice_budget = o.budget;
  params.campaign.target_relations = o.target_relations;
  params.campaign.workers = g.resolved_workers();
  params.workers = g.resolved_workers();

  FactorReport report = factor(n, params, g.seed);

  if (!o.relations_path.empty()) {
    std::ofstream rf(o.relations_path);
    write_relations_jsonl(rf, report.relations);
  }
  if (!o.report_path.empty()) {
    std::ofstream rf(o.report_path);
    rf << report_to_json(report).dump(2) << '\n';
  }
  if (o.json) {
    out << report_to_json(report).dump(2) << '\n';
  } else {
    if (report.status == FactorStatus::success && report.factors) {
      out << "N = " << to_decimal(n) << '\n';
      out << "p = " << to_decimal(report.factors->first)
          << "  q = " << to_decimal(report.factors->second) << '\n';
      out << "relations = " << report.relations_used
          << "  lattices = " << report.lattices_consumed
          << "  collision_rate = " << report.collision_rate
          << "  tau_trials = " << report.tau_trials << '\n';
      out << "elapsed = " << report.elapsed_seconds << " s\n";
    } else {
      err << "factor: " << report.detail << '\n';
      if (report.factors) {
        err << "known split: " << to_decimal(report.factors->first) << " * "
            << to_decimal(report.factors->second) << '\n';
      }
    }
  }
  return status_exit_code(report.status);
}

struct ExperimentOpts {
  std::string id;
  std::string bits = "20:40:4";
  std::string dims = "8:14";
  int lattices = 0;
  int semiprimes = 0;
  bool paper_scale = false;
  double beta = 0.66;
  int sweeps_per_m = 20;
  double beta_start = 0.05;
  double beta_end = 5.0;
};

int cmd_experiment(const GlobalOpts& g, const ExperimentOpts& o, std::ostream& out,
                   std::ostream& err) {
  (void)err;
  ExperimentConfig config;
  config.id = o.id;
  Range bits = parse_range(o.bits);
  config.bits_min = bits.lo;
  config.bits_max = bits.hi;
  config.bits_step = bits.step == 1 && bits.hi > bits.lo ? 4 : bits.step;
  Range dims = parse_range(o.dims);
  config.dim_min = dims.lo;
  config.dim_max = dims.hi;
  config.lattices = o.lattices;
  config.semiprimes = o.semiprimes;
  config.paper_scale = o.paper_scale;
  config.seed = g.seed;
  config.workers = g.resolved_workers();
  config.engine.beta = o.beta;
  config.engine.sweeps_per_m = o.sweeps_per_m;
  config.engine.beta_start = o.beta_start;
  config.engine.beta_end = o.beta_end;
  config.output_dir = g.output_dir;

  auto result = run_experiment(config);
  for (const auto& f : result.files) out << f.string() << '\n';
  return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lattice factoring with a simulated p-bit CVP refinement engine"};
  app.require_subcommand(1);
  app.fallthrough();  // allow global flags after the subcommand name
  app.set_config("--config", "", "Key=value configuration file; flags take precedence");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Root seed; all randomness derives from it")
      ->envname("LATFACT_SEED");
  app.add_option("--workers", g.workers, "Worker threads (0 = hardware concurrency)")
      ->envname("LATFACT_WORKERS");
  app.add_option("--output", g.output_dir, "Output directory")->envname("LATFACT_OUTPUT");

  FactorOpts fo;
  auto* fac = app.add_subcommand("factor", "Factor a semiprime");
  fac->add_option("N", fo.n_text, "Integer to factor (decimal)")->required();
  fac->add_option("--m", fo.m, "Lattice dimension (default ceil(bits/3))");
  fac->add_option("--M", fo.M, "Smoothness bound (default m^2)");
  fac->add_option("--c", fo.c, "Lattice precision parameter");
  fac->add_option("--beta", fo.beta, "Collection inverse temperature");
  fac->add_option("--sweeps-per-m", fo.sweeps_per_m, "Collection sweeps per dimension");
  fac->add_option("--budget", fo.budget, "Lattice budget (default 200*(M+2))");
  fac->add_option("--target-relations", fo.target_relations, "Relation target (default M+2)");
  fac->add_flag("--json", fo.json, "Machine-readable report on stdout");
  fac->add_flag("--paper-scale", fo.paper_scale,
                "Run with the published campaign parameters (these are already the defaults)");
  fac->add_option("--report", fo.report_path, "Also write the JSON report to this file");
  fac->add_option("--relations", fo.relations_path, "Write the relation set as JSON lines");

  RefineOpts ro;
  auto* ref = app.add_subcommand("refine", "Refine one CVP approximation");
  ref->add_option("--n", ro.n_text, "Semiprime (decimal); omit to generate one");
  ref->add_option("--bits", ro.bits, "Bit length of the generated semiprime");
  ref->add_option("--m", ro.m, "Lattice dimension (default ceil(bits/3))");
  ref->add_option("--c", ro.c, "Lattice precision parameter");
  ref->add_option("--sweeps", ro.sweeps, "Sweep budget (default 50*m)");
  ref->add_option("--beta-start", ro.beta_start, "Linear schedule start");
  ref->add_option("--beta-end", ro.beta_end, "Linear schedule end");
  ref->add_flag("--oracle", ro.oracle, "Compare against exhaustive enumeration");
  ref->add_flag("--json", ro.json, "Machine-readable report");
  ref->add_option("--trace", ro.trace_path, "Write per-sweep trace CSV");

  EnumOpts eo;
  auto* enu = app.add_subcommand("enumerate", "Exhaustive neighborhood census");
  enu->add_option("--n", eo.n_text, "Semiprime (decimal); omit to generate one");
  enu->add_option("--bits", eo.bits, "Bit length of the generated semiprime");
  enu->add_option("--m", eo.m, "Lattice dimension");
  enu->add_option("--M", eo.M, "Smoothness bound (default m^2)");
  enu->add_option("--c", eo.c, "Lattice precision parameter");
  enu->add_option("--weight-bound", eo.weight_bound, "Only states with <= this many ones");
  enu->add_option("--out", eo.out_path, "Census CSV path");
  enu->add_option("--lattice-json", eo.lattice_json_path,
                  "Also serialize the lattice instance to this JSON file");

  ExperimentOpts xo;
  auto* exp = app.add_subcommand("experiment", "Run a measurement campaign");
  exp->add_option("id", xo.id, "One of: fig2a, fig2b, fig3, fig4")->required();
  exp->add_option("--bits", xo.bits, "Bit-length range lo:hi[:step]");
  exp->add_option("--dims", xo.dims, "Dimension range lo:hi (fig2a)");
  exp->add_option("--lattices", xo.lattices, "Lattices per data point");
  exp->add_option("--semiprimes", xo.semiprimes, "Semiprimes per data point (fig4)");
  exp->add_flag("--paper-scale", xo.paper_scale, "Restore published dataset sizes");
  exp->add_option("--beta", xo.beta, "Collection inverse temperature");
  exp->add_option("--sweeps-per-m", xo.sweeps_per_m, "Collection sweeps per dimension");
  exp->add_option("--beta-start", xo.beta_start, "Refinement schedule start");
  exp->add_option("--beta-end", xo.beta_end, "Refinement schedule end");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    int code = app.exit(e, msg, msg);
    (code == 0 ? out : err) << msg.str();
    return code == 0 ? exit_ok : exit_invalid_input;
  }

  try {
    if (fac->parsed()) return cmd_factor(g, fo, out, err);
    if (ref->parsed()) return cmd_refine(g, ro, out, err);
    if (enu->parsed()) return cmd_enumerate(g, eo, out, err);
    if (exp->parsed()) return cmd_experiment(g, xo, out, err);
  } catch (const CLI::ValidationError& e) {
    err << e.what() << '\n';
    return exit_invalid_input;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_invalid_input;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_internal;
  }
  return exit_invalid_input;
}

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace latfact::cli
