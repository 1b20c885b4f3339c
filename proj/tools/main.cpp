// rope: simulate data, count edge selections, fit ROPE, select edges, and
// compare against stability selection.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "rope/bench.hpp"
#include "rope/error.hpp"
#include "rope/io.hpp"
#include "rope/netgen.hpp"
#include "rope/rope.hpp"
#include "rope/select.hpp"

namespace {

using namespace rope;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotFittable = 3;
constexpr int kExitIo = 4;

void warn(const std::string& message) { std::cerr << "rope: warning: " << message << '\n'; }

void need(const std::string& value, const char* flag) {
  if (value.empty()) throw InvalidArgument(std::string("missing required option --") + flag);
}

struct GridArgs {
  double lambda_min = 0.02;
  double lambda_max = 0.3;
  int steps = 15;

  void add(CLI::App& cmd) {
    cmd.add_option("--lambda-min", lambda_min, "smallest penalty")->capture_default_str();
    cmd.add_option("--lambda-max", lambda_max, "largest penalty")->capture_default_str();
    cmd.add_option("--steps", steps, "number of log-spaced penalties")->capture_default_str();
  }
  PenaltyGrid grid() const {
    require(lambda_min < lambda_max, "--lambda-min must be below --lambda-max");
    require(steps >= 2, "--steps must be at least 2");
    return PenaltyGrid::log_spaced(lambda_min, lambda_max, steps);
  }
};

struct PlanArgs {
  int B = 500;
  double weakness = 0.8;
  std::string resample = "bootstrap";
  int subsample_size = 0;
  std::uint64_t seed = 1;

  void add(CLI::App& cmd) {
    cmd.add_option("--B", B, "number of resamples")->capture_default_str();
    cmd.add_option("--weakness", weakness, "randomized-lasso weakness in (0, 1]")->capture_default_str();
    cmd.add_option("--resample", resample, "bootstrap or subsample")->capture_default_str();
    cmd.add_option("--subsample-size", subsample_size, "rows per subsample (0: n / 2)")->capture_default_str();
    cmd.add_option("--seed", seed, "random seed")->capture_default_str();
  }
  ResamplePlan plan() const {
    ResamplePlan p;
    p.kind = parse_resample_kind(resample);
    p.B = B;
    p.weakness = weakness;
    p.subsample_size = subsample_size;
    p.seed = seed;
    return p;
  }
};

struct PreprocessArgs {
  std::optional<double> keep_fraction;
  bool rescale = false;

  void add(CLI::App& cmd) {
    cmd.add_option("--mad-filter", keep_fraction, "keep this fraction of columns with the largest MAD");
    cmd.add_flag("--mad-scale", rescale, "rescale columns to MAD 1");
  }
  DataMatrix apply(DataMatrix data) const {
    if (keep_fraction) data = mad_filter(data, *keep_fraction);
    if (rescale) data = mad_scale(data);
    return data;
  }
};

struct FitArgs {
  int n_boot = 100;
  double ci_level = 0.95;
  double inflation = 0.75;
  int restarts = 8;
  int boot_restarts = 1;
  bool reuse_first_pass_ci = false;

  void add(CLI::App& cmd) {
    cmd.add_option("--n-boot", n_boot, "bootstrap replicates for the argmax CI")->capture_default_str();
    cmd.add_option("--ci-level", ci_level, "confidence level of the argmax CI")->capture_default_str();
    cmd.add_option("--inflation", inflation, "fraction of edges below the inflation cutoff")
        ->capture_default_str();
    cmd.add_option("--restarts", restarts, "start points per full-data fit")->capture_default_str();
    cmd.add_option("--boot-restarts", boot_restarts, "extra start points per bootstrap refit")
        ->capture_default_str();
    cmd.add_flag("--reuse-first-pass-ci", reuse_first_pass_ci,
                 "take lambda_b from the first-pass CI instead of recomputing it");
  }
  RopeConfig config(std::uint64_t seed, int threads) const {
    RopeConfig c;
    c.n_boot = n_boot;
    c.ci_level = ci_level;
    c.fit.inflation_fraction = inflation;
    c.fit.restarts = restarts;
    c.boot_restarts = boot_restarts;
    c.reuse_first_pass_ci = reuse_first_pass_ci;
    c.seed = seed;
    c.threads = threads;
    return c;
  }
};

struct ScenarioArgs {
  std::string topology = "scale_free";
  int d = 500;
  std::optional<std::size_t> edges;
  std::string signal = "strong";
  std::string pattern = "covariance";

  void add(CLI::App& cmd) {
    cmd.add_option("--topology", topology, "scale_free, hubby or chain")->capture_default_str();
    cmd.add_option("--d", d, "number of nodes")->capture_default_str();
    cmd.add_option("--edges", edges, "scale-free edge count (default d - 1)");
    cmd.add_option("--signal", signal, "strong or weak")->capture_default_str();
    cmd.add_option("--pattern", pattern, "covariance or precision placement of edge strengths")
        ->capture_default_str();
  }
  StrengthPattern strength_pattern() const {
    if (pattern == "covariance") return StrengthPattern::covariance;
    if (pattern == "precision") return StrengthPattern::precision;
    throw InvalidArgument("unknown --pattern '" + pattern + "'");
  }
};

int run_simulate(const ScenarioArgs& s, int n, std::uint64_t seed, const std::string& data_path,
                 const std::string& truth_path) {
  need(data_path, "data");
  need(truth_path, "truth");
  const Topology kind = parse_topology(s.topology);
  const EdgeSet truth = gen_topology(kind, s.d, s.edges, derive_seed(seed, 1));
  CovarianceOptions cov_options;
  cov_options.pattern = s.strength_pattern();
  const auto cov = build_covariance(truth, parse_signal(s.signal), derive_seed(seed, 2), cov_options);
  io::write_data_csv(data_path, sample_gaussian(cov, n, derive_seed(seed, 3)));
  io::write_edges_csv(truth_path, truth);
  return kExitOk;
}

int run_counts(const std::string& data_path, const std::string& out, const PreprocessArgs& pre,
               const GridArgs& grid, const PlanArgs& plan, int threads) {
  need(data_path, "data");
  need(out, "out");
  const DataMatrix data = pre.apply(io::read_data_csv(data_path));
  const CountMatrix counts = compute_counts(data, grid.grid(), plan.plan(), threads);
  for (const auto& w : counts.warnings) warn(w);
  io::write_counts(out, counts);
  return kExitOk;
}

int run_fit(const std::string& counts_path, const std::string& out, const std::string& g_curve,
            const FitArgs& fit, std::uint64_t seed, int threads) {
  need(counts_path, "counts");
  need(out, "out");
  const CountMatrix counts = io::read_counts(counts_path);
  const RopeResult result = run_rope(counts, fit.config(seed, threads));
  for (const auto& note : result.notes) warn(note);
  io::write_rope_result(out, result);
  if (!g_curve.empty()) io::write_g_curve_csv(g_curve, result);
  return kExitOk;
}

int run_select(const std::string& result_path, double target, const std::string& out) {
  need(result_path, "result");
  need(out, "out");
  require(target > 0.0 && target < 1.0, "--target must be in (0, 1)");
  io::write_edges_csv(out, select_edges(io::read_rope_result(result_path), target));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ROPE: FDR-controlled edge selection for sparse network models", "rope"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("rope ") + ROPE_VERSION);

  int threads = 1;
  std::string config_path;
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")->capture_default_str();
  app.add_option("--config", config_path, "key = value file; command-line flags take precedence");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate a network, its covariance and Gaussian data");
  ScenarioArgs sim_scenario;
  int sim_n = 200;
  std::uint64_t sim_seed = 1;
  std::string sim_data, sim_truth;
  sim_scenario.add(*simulate);
  simulate->add_option("--n", sim_n, "observations")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "random seed")->capture_default_str();
  simulate->add_option("--data", sim_data, "output data CSV");
  simulate->add_option("--truth", sim_truth, "output edge CSV");

  // counts
  auto* counts = app.add_subcommand("counts", "edge-selection counts over resamples and penalties");
  std::string counts_data, counts_out;
  PreprocessArgs counts_pre;
  GridArgs counts_grid;
  PlanArgs counts_plan;
  counts->add_option("--data", counts_data, "input data CSV");
  counts->add_option("--out", counts_out, "output counts CSV (metadata goes to <out>.json)");
  counts_pre.add(*counts);
  counts_grid.add(*counts);
  counts_plan.add(*counts);

  // fit
  auto* fit = app.add_subcommand("fit", "fit ROPE to a counts file and assign q-values");
  std::string fit_counts, fit_out, fit_g;
  FitArgs fit_args;
  std::uint64_t fit_seed = 1;
  fit->add_option("--counts", fit_counts, "input counts CSV");
  fit->add_option("--out", fit_out, "output result JSON");
  fit->add_option("--g-curve", fit_g, "output separation curve CSV");
  fit->add_option("--seed", fit_seed, "bootstrap seed")->capture_default_str();
  fit_args.add(*fit);

  // select
  auto* select = app.add_subcommand("select", "edges with q-value below a target FDR");
  std::string select_result, select_out;
  double select_target = 0.1;
  select->add_option("--result", select_result, "result JSON from fit");
  select->add_option("--target", select_target, "target FDR")->capture_default_str();
  select->add_option("--out", select_out, "output edge CSV");

  // compare
  auto* compare = app.add_subcommand("compare", "simulation study of ROPE against stability selection");
  ScenarioArgs cmp_scenario;
  GridArgs cmp_grid;
  PlanArgs cmp_plan;
  FitArgs cmp_fit;
  int cmp_n = 200;
  int cmp_replicates = 20;
  std::vector<double> cmp_targets{0.05, 0.1, 0.15};
  bool cmp_stabsel_own = false;
  bool cmp_no_first_pass = false;
  std::string cmp_out;
  cmp_scenario.add(*compare);
  cmp_grid.add(*compare);
  cmp_plan.add(*compare);
  cmp_fit.add(*compare);
  compare->add_option("--n", cmp_n, "observations")->capture_default_str();
  compare->add_option("--replicates", cmp_replicates, "number of replicates")->capture_default_str();
  compare->add_option("--targets", cmp_targets, "target FDRs")->delimiter(',')->capture_default_str();
  compare->add_flag("--stabsel-own-counts", cmp_stabsel_own,
                    "give stability selection its own subsampled counts at n / 2");
  compare->add_flag("--no-first-pass", cmp_no_first_pass, "omit the single-lambda first-pass rows");
  compare->add_option("--out", cmp_out, "output report CSV");

  // kappa
  auto* kappa = app.add_subcommand("kappa", "selection agreement across subsamples of the resamples");
  std::string kappa_data, kappa_out;
  PreprocessArgs kappa_pre;
  GridArgs kappa_grid;
  PlanArgs kappa_plan;
  FitArgs kappa_fit;
  int kappa_subsamples = 20;
  int kappa_size = 400;
  std::vector<double> kappa_targets{0.05, 0.1, 0.15};
  kappa->add_option("--data", kappa_data, "input data CSV");
  kappa->add_option("--out", kappa_out, "output kappa CSV");
  kappa_pre.add(*kappa);
  kappa_grid.add(*kappa);
  kappa_plan.add(*kappa);
  kappa_fit.add(*kappa);
  kappa->add_option("--subsamples", kappa_subsamples, "number of subsamples")->capture_default_str();
  kappa->add_option("--models-per-subsample", kappa_size, "resampled models per subsample")->capture_default_str();
  kappa->add_option("--targets", kappa_targets, "target FDRs")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    CLI::App* command = app.get_subcommands().front();
    if (!config_path.empty()) {
      const auto config = cli::read_config(config_path);
      if (const auto it = config.find("threads"); it != config.end() && app.get_option("--threads")->count() == 0)
        threads = std::stoi(it->second);
      for (const auto& key : cli::apply_config(*command, config)) warn("unused config key " + key);
    }
    require(threads >= 1, "--threads must be at least 1");

    if (command == simulate) return run_simulate(sim_scenario, sim_n, sim_seed, sim_data, sim_truth);
    if (command == counts)
      return run_counts(counts_data, counts_out, counts_pre, counts_grid, counts_plan, threads);
    if (command == fit) return run_fit(fit_counts, fit_out, fit_g, fit_args, fit_seed, threads);
    if (command == select) return run_select(select_result, select_target, select_out);
    if (command == compare) {
      need(cmp_out, "out");
      Scenario s;
      s.topology = parse_topology(cmp_scenario.topology);
      s.target_edges = cmp_scenario.edges;
      s.signal = parse_signal(cmp_scenario.signal);
      s.signal_name = cmp_scenario.signal;
      s.pattern = cmp_scenario.strength_pattern();
      s.d = cmp_scenario.d;
      s.n = cmp_n;
      s.B = cmp_plan.B;
      s.steps = cmp_grid.steps;
      s.lambda_min = cmp_grid.lambda_min;
      s.lambda_max = cmp_grid.lambda_max;
      cmp_grid.grid();
      s.weakness = cmp_plan.weakness;
      s.rope_resampling = parse_resample_kind(cmp_plan.resample);
      s.stabsel_shares_counts = !cmp_stabsel_own;
      s.targets = cmp_targets;
      s.replicates = cmp_replicates;
      s.seed = cmp_plan.seed;
      s.rope = cmp_fit.config(1, 1);
      s.include_first_pass = !cmp_no_first_pass;
      s.threads = threads;
      for (int r = 0; r < s.replicates; ++r)
        std::cerr << "rope: replicate " << r << " seed " << replicate_seed(s.seed, r) << '\n';
      io::write_report_csv(cmp_out, run_comparison(s));
      return kExitOk;
    }
    if (command == kappa) {
      need(kappa_data, "data");
      need(kappa_out, "out");
      const DataMatrix data = kappa_pre.apply(io::read_data_csv(kappa_data));
      const auto selections = compute_selections(data, kappa_grid.grid(), kappa_plan.plan(), threads);
      KappaConfig kc;
      kc.subsamples = kappa_subsamples;
      kc.subsample_size = kappa_size;
      kc.targets = kappa_targets;
      kc.seed = kappa_plan.seed;
      kc.rope = kappa_fit.config(kappa_plan.seed, 1);
      kc.threads = threads;
      io::write_kappa_csv(kappa_out, kappa_analysis(selections, kc));
      return kExitOk;
    }
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "rope: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NotFittable& e) {
    std::cerr << "rope: not fittable: " << e.what() << '\n';
    return kExitNotFittable;
  } catch (const IoError& e) {
    std::cerr << "rope: I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "rope: error: " << e.what() << '\n';
    return kExitOther;
  }
}
