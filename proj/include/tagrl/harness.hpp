#pragma once

// Experiment harness: presets, config files, ablations and sweeps, and the
// plot-ready series built from them. Every run writes metrics.csv,
// pagu_updates.jsonl and manifest.json into its own directory.

#include "tagrl/graph.hpp"
#include "tagrl/trainer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tagrl {

enum class Mode { train, eval, ablate, sweep_gamma, sweep_sparsity, sweep_dim, gen_topology, check_grad };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view text);

struct SweepSpec {
  std::vector<double> gammas{0.90, 0.93, 0.95, 0.96, 0.99};
  std::vector<double> ratios{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<int> dims{16, 32, 64, 128, 256};
};

struct ExperimentConfig {
  Mode mode = Mode::train;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string preset = "desk";
  std::filesystem::path output_dir = "runs";
  std::uint64_t topology_seed = 7;
  GeneratorConfig topology;
  std::optional<std::filesystem::path> topology_file;  // overrides the generator
  int final_window = 100;  // epochs averaged for summaries
  SweepSpec sweep;
  RunConfig run;

  void validate() const;
};

// "desk": n = 12, 8 flows, batch 8, 300 epochs. "paper": n = 40, 32 flows, batch 32, 1000 epochs.
ExperimentConfig preset_config(std::string_view preset);

// A config file is applied on top of its "preset" (desk when absent).
// Unknown keys anywhere raise ValidationError.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

// Means over the last `window` epochs (all epochs when fewer).
struct RunSummary {
  Variant variant = Variant::full;
  std::uint64_t seed = 0;
  double reward = 0.0;
  double avg_throughput = 0.0;
  double avg_latency_ms = 0.0;
  double max_link_utilization_pct = 0.0;
  double first_window_reward = 0.0;  // mean over the first `window` epochs
  int graph_update_calls = 0;
  std::size_t final_edge_count = 0;
  std::vector<EpochRecord> history;
  std::vector<GraphUpdateRecord> updates;
};

RunSummary summarize_run(const Trainer& trainer, int window);

struct AblationRow {
  Variant variant;
  RunSummary summary;
};

struct SweepPoint {
  double value = 0.0;
  RunSummary summary;
};

struct SweepResult {
  std::string name;       // "gamma", "retention_ratio", "feature_dim"
  std::vector<SweepPoint> points;  // value-major, then seed
};

struct PlotPoint {
  double x = 0.0;
  double mean = 0.0;
  double stdev = 0.0;
  int count = 0;
};

struct PlotSeries {
  std::string name;
  std::string metric = "reward";
  std::vector<PlotPoint> points;
};

// One point per distinct value with mean and sample stdev of reward across seeds.
PlotSeries emit_plot_data(const SweepResult& result);
std::string plot_series_csv(const PlotSeries& series);
nlohmann::json plot_series_to_json(const PlotSeries& series);
PlotSeries plot_series_from_json(const nlohmann::json& j);

double sample_mean(const std::vector<double>& xs);
double sample_stdev(const std::vector<double>& xs);

class ExperimentRunner {
 public:
  explicit ExperimentRunner(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const PhysicalTopology& topology() const { return topology_; }

  // Trains one run and writes its files under dir. Identical (config,
  // topology, seed) requests are served from memory after the first.
  RunSummary run(const RunConfig& run, const PhysicalTopology& topology, std::uint64_t seed,
                 const std::filesystem::path& dir);

  std::vector<RunSummary> run_training();
  std::vector<AblationRow> run_ablation();
  SweepResult run_gamma_sweep();
  SweepResult run_sparsity_sweep();
  SweepResult run_dim_sweep();

  int trained_runs() const { return trained_runs_; }

 private:
  void write_manifest(const std::filesystem::path& dir, const nlohmann::json& extra) const;
  void write_sweep(const SweepResult& result, const std::filesystem::path& dir) const;

  ExperimentConfig config_;
  PhysicalTopology topology_;
  std::map<std::string, RunSummary> memo_;
  int trained_runs_ = 0;
};

// Ablation CSV: variant,seed,reward,avg_throughput,avg_latency_ms,max_link_utilization_pct
std::string ablation_csv(const std::vector<AblationRow>& rows);
// Per-variant mean and stdev of each column.
std::string ablation_summary_csv(const std::vector<AblationRow>& rows);

}  // namespace tagrl
