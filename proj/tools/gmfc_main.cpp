// gmfc: step kernels, controlled particle simulation, and experiment
// drivers behind one binary.  Exit codes: 0 success/pass, 1 experiment
// verdict fail, 2 config or usage error, 3 runtime failure, 4 exact cut
// norm above its cap, 5 experiment inconclusive.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "gmfc/config.hpp"
#include "gmfc/cut_norm.hpp"
#include "gmfc/textio.hpp"

using namespace gmfc;

namespace {

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed, bool seed_set, int workers_flag) {
  SimulateSetup s = parse_simulate_config(load_ini(config_path));
  if (seed_set) s.sim.seed = seed;
  s.sim.workers = resolve_workers(workers_flag, s.sim.workers);
  s.sim.validate();
  TrajectoryBundle b = simulate(s.model, s.law, s.kernel, s.init, s.sim);

  std::filesystem::create_directories(out_dir);
  write_trajectory_csv(b, out_dir + "/trajectory.csv");
  {
    std::ofstream out(out_dir + "/costs.csv", std::ios::binary);
    out << "rep,running_cost,terminal_cost,J\n";
    for (const Trajectory& tr : b.reps)
      out << fmt_int(tr.rep) << ',' << fmt_g(tr.running_cost) << ','
          << fmt_g(tr.terminal_cost) << ',' << fmt_g(tr.total_cost()) << '\n';
  }
  write_cost_summary_csv(s.model.id, s.sim, evaluate_cost(b), out_dir + "/cost_summary.csv");
  return 0;
}

int run_cutnorm(const std::string& matrix_path, const std::string& graphon_id, int n,
                bool exact_flag, bool heuristic_flag, int restarts, std::uint64_t seed) {
  if (exact_flag && heuristic_flag)
    throw BadSpec("cutnorm: --exact and --heuristic exclude each other");
  StepKernel k;
  if (!matrix_path.empty()) {
    k = read_step_kernel_csv(matrix_path);
  } else if (!graphon_id.empty()) {
    if (n < 1) throw BadSpec("cutnorm: --graphon needs --n >= 1");
    k = sample_from_graphon(graphon_registry(graphon_id), n);
  } else {
    throw BadSpec("cutnorm: provide --matrix PATH or --graphon ID with --n");
  }
  if (k.dim() != 1) throw BadSpec("cutnorm: kernel cells must be scalar");

  std::vector<double> vals;
  vals.reserve((size_t)k.n() * k.n());
  for (int i = 0; i < k.n(); ++i)
    for (int j = 0; j < k.n(); ++j) vals.push_back(k.scalar(i, j));
  WeightedMatrix m = WeightedMatrix::uniform(k.n(), std::move(vals));

  double value;
  const char* method;
  if (exact_flag || (!heuristic_flag && k.n() <= kCutNormExactCap)) {
    value = cut_norm_exact(m);  // SizeCapExceeded maps to exit 4
    method = "exact";
  } else {
    value = cut_norm_lower_bound(m, restarts, seed);
    method = "lower-bound";
  }
  std::printf("cutnorm=%s method=%s\n", fmt_g(value).c_str(), method);
  return 0;
}

int run_experiment(const std::string& id, const std::string& config_path,
                   const std::string& out_dir, std::uint64_t seed, bool seed_set,
                   int workers_flag) {
  IniFile file = config_path.empty() ? IniFile{} : load_ini(config_path);
  ExperimentReport rep;
  if (id == "example1") {
    Example1Config c = parse_example1_config(file);
    if (seed_set) c.seed = seed;
    c.workers = resolve_workers(workers_flag, c.workers);
    rep = run_example1(c);
  } else if (id == "example2") {
    Example2Config c = parse_example2_config(file);
    if (seed_set) c.seed = seed;
    c.workers = resolve_workers(workers_flag, c.workers);
    rep = run_example2(uniform_relaxed_control(), c);
  } else if (id == "converge") {
    ConvergeSetup s = parse_converge_config(file);
    if (seed_set) s.cfg.seed = seed;
    s.cfg.workers = resolve_workers(workers_flag, s.cfg.workers);
    rep = convergence_sweep(attraction_model(s.phi, s.rule), bang_bang_law(s.phi),
                            graphon_registry(s.graphon), s.ns, s.ref_n, s.cfg);
  } else if (id == "kernelconv") {
    KernelConvSetup s = parse_kernelconv_config(file);
    rep = kernel_convergence_check(
        graphon_registry(s.graphon), s.ns,
        [](std::span<const double> mark) { return mark[0]; }, s.f_lipschitz);
  } else if (id == "optimize") {
    OptimizeSetup s = parse_optimize_config(file);
    if (seed_set) s.sim.seed = seed;
    s.sim.workers = resolve_workers(workers_flag, s.sim.workers);
    s.sim.validate();
    OptimizeResult res = optimize_control(
        attraction_pair_model(s.phi), s.make_family(),
        sample_from_graphon(graphon_registry(s.graphon), s.sim.n), s.init, s.sim, s.budget,
        s.elite_fraction, s.population);
    rep = std::move(res.report);
  } else {
    throw BadSpec("unknown experiment id: " + id +
                  " (known: example1 example2 converge kernelconv optimize)");
  }

  write_experiment_outputs(rep, out_dir + "/" + rep.experiment_id);
  std::printf("experiment=%s verdict=%s\n", rep.experiment_id.c_str(),
              verdict_name(rep.verdict));
  if (rep.verdict == Verdict::Pass) return 0;
  if (rep.verdict == Verdict::Fail) return 1;
  return 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"controlled pairwise-interaction particle systems: simulation, kernel "
               "tools, and experiment drivers"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "print every command with all of its flags");
  app.footer("Run 'gmfc <command> --help' or 'gmfc --help-all' for the flags of each command.");

  std::string config_path, out_dir = "out";
  std::uint64_t seed = 0;
  int workers = 0;

  CLI::App* sim = app.add_subcommand("simulate", "run one configured particle simulation");
  sim->add_option("--config", config_path, "INI config file")->required();
  sim->add_option("--out", out_dir, "output directory");
  CLI::Option* sim_seed = sim->add_option("--seed", seed, "override the config seed");
  sim->add_option("--workers", workers, "worker threads (0: config, GMFC_THREADS, hardware)");

  std::string matrix_path, graphon_id;
  int cut_n = 0, restarts = 32;
  bool exact_flag = false, heuristic_flag = false;
  CLI::App* cut = app.add_subcommand("cutnorm", "cut norm of a step kernel");
  cut->add_option("--matrix", matrix_path, "step kernel CSV");
  cut->add_option("--graphon", graphon_id, "named graphon, sampled at --n");
  cut->add_option("--n", cut_n, "sampling size for --graphon");
  cut->add_flag("--exact", exact_flag, "force exact enumeration (exit 4 above the cap)");
  cut->add_flag("--heuristic", heuristic_flag, "force the alternating lower bound");
  cut->add_option("--restarts", restarts, "random starts for the lower bound");
  CLI::Option* cut_seed = cut->add_option("--seed", seed, "seed for the lower bound");

  std::string exp_id;
  CLI::App* exp = app.add_subcommand("experiment", "run a named experiment driver");
  exp->add_option("id", exp_id, "example1 | example2 | converge | kernelconv | optimize")
      ->required();
  exp->add_option("--config", config_path, "INI config file (defaults used when absent)");
  exp->add_option("--out", out_dir, "output directory");
  CLI::Option* exp_seed = exp->add_option("--seed", seed, "override the config seed");
  exp->add_option("--workers", workers, "worker threads (0: config, GMFC_THREADS, hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version keep 0, usage errors map to 2
  }

  try {
    if (app.got_subcommand(sim))
      return run_simulate(config_path, out_dir, seed, sim_seed->count() > 0, workers);
    if (app.got_subcommand(cut))
      return run_cutnorm(matrix_path, graphon_id, cut_n, exact_flag, heuristic_flag,
                         restarts, cut_seed->count() > 0 ? seed : 1);
    return run_experiment(exp_id, config_path, out_dir, seed, exp_seed->count() > 0,
                          workers);
  } catch (const SizeCapExceeded& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const BadSpec& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 3;
  }
}
