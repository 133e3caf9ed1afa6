// tagrl: topology generation, training, evaluation, ablations and sweeps.
//
// Exit codes: 0 success, 2 validation error, 3 numeric failure.

#include "tagrl/error.hpp"
#include "tagrl/harness.hpp"
#include "tagrl/rng.hpp"
#include "tagrl/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tagrl;

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string variant;
  std::string seeds;
  std::string out;
  std::uint64_t seed = 1;
  int epochs = -1;
  std::string checkpoint;
  std::string resume;
  int episodes = 32;
  int samples = 200;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      if (item.empty() || item[0] == '-') throw std::invalid_argument(item);
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("bad seed list '" + text + "'");
    }
  }
  if (seeds.empty()) throw ValidationError("seeds must be nonempty");
  return seeds;
}

ExperimentConfig resolve(const Options& o, Mode mode) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = load_experiment(o.config);
    if (!o.preset.empty() && o.preset != c.preset) {
      // Re-apply the file on top of the requested preset.
      std::ifstream in(o.config, std::ios::binary);
      auto j = nlohmann::json::parse(in);
      j["preset"] = o.preset;
      c = experiment_from_json(j);
    }
  } else {
    c = preset_config(o.preset.empty() ? "desk" : o.preset);
  }
  c.mode = mode;
  if (!o.variant.empty()) c.run.variant = parse_variant(o.variant);
  if (!o.seeds.empty()) c.seeds = parse_seeds(o.seeds);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.epochs >= 0) c.run.train.epochs = o.epochs;
  c.validate();
  return c;
}

void print_summary(const RunSummary& s) {
  std::printf("%-8s seed=%llu reward=%.4f throughput=%.4f latency_ms=%.3f max_util_pct=%.2f graph_updates=%d\n",
              std::string(to_string(s.variant)).c_str(), static_cast<unsigned long long>(s.seed), s.reward,
              s.avg_throughput, s.avg_latency_ms, s.max_link_utilization_pct, s.graph_update_calls);
}

void print_series(const PlotSeries& series) {
  for (const auto& p : series.points)
    std::printf("%s=%g reward=%.4f +/- %.4f (n=%d)\n", series.name.c_str(), p.x, p.mean, p.stdev, p.count);
}

int cmd_gen_topology(const Options& o) {
  if (o.out.empty()) throw ValidationError("--out is required");
  ExperimentConfig c = resolve(o, Mode::gen_topology);
  const auto topology = generate_geant_like(o.seed, c.topology);
  save_topology(topology, o.out);
  std::printf("wrote %s: %d nodes, %zu links\n", o.out.c_str(), topology.num_nodes(), topology.num_edges());
  return 0;
}

int cmd_train(const Options& o) {
  if (!o.resume.empty()) {
    Trainer trainer = Trainer::load_checkpoint(o.resume);
    // --epochs sets the total to reach; the checkpoint's own count otherwise.
    const int target = o.epochs >= 0 ? o.epochs : trainer.config().train.epochs;
    while (trainer.epoch() < target) trainer.run_epoch();
    const fs::path dir = o.out.empty() ? fs::path("runs") / "resumed" : fs::path(o.out);
    fs::create_directories(dir);
    std::ofstream csv(dir / "metrics.csv", std::ios::binary);
    csv << metrics_csv_header() << "\n";
    for (const auto& r : trainer.history()) csv << metrics_csv_row(r, trainer.seed()) << "\n";
    std::ofstream log(dir / "pagu_updates.jsonl", std::ios::binary);
    for (const auto& u : trainer.update_log()) log << u.to_json_line() << "\n";
    if (!o.checkpoint.empty()) trainer.save_checkpoint(o.checkpoint);
    print_summary(summarize_run(trainer, 100));
    return 0;
  }
  ExperimentConfig c = resolve(o, Mode::train);
  c.seeds = {o.seed};
  ExperimentRunner runner(c);
  if (!o.checkpoint.empty()) {
    Trainer trainer(runner.topology(), c.run, o.seed);
    trainer.train();
    trainer.save_checkpoint(o.checkpoint);
  }
  for (const auto& s : runner.run_training()) print_summary(s);
  return 0;
}

int cmd_eval(const Options& o) {
  if (o.checkpoint.empty()) throw ValidationError("--checkpoint is required");
  if (o.episodes < 1) throw ValidationError("--episodes must be at least 1");
  const Trainer trainer = Trainer::load_checkpoint(o.checkpoint);
  double rw = 0, tp = 0, lat = 0, util = 0, sp_rw = 0, sp_tp = 0, sp_lat = 0, sp_util = 0;
  const auto& env = trainer.config().env;
  for (int e = 0; e < o.episodes; ++e) {
    const auto idx = static_cast<std::uint64_t>(e);
    const auto flow_seed = mix_seed(o.seed, 0xe7a1, idx);
    const auto traj = trainer.rollout_episode(flow_seed, mix_seed(o.seed ^ 0x2, 0xe7a1, idx));
    rw += traj.metrics.reward;
    tp += traj.metrics.avg_throughput;
    lat += traj.metrics.avg_latency_ms;
    util += traj.metrics.max_link_utilization_pct;
    const auto flows = sample_flows(flow_seed, trainer.topology().num_nodes(), env.flows_per_episode, env);
    const auto sp = shortest_path_baseline(trainer.topology(), flows, env);
    sp_rw += sp.reward;
    sp_tp += sp.avg_throughput;
    sp_lat += sp.avg_latency_ms;
    sp_util += sp.max_link_utilization_pct;
  }
  const double n = o.episodes;
  std::printf("policy        reward=%.4f throughput=%.4f latency_ms=%.3f max_util_pct=%.2f\n", rw / n, tp / n,
              lat / n, util / n);
  std::printf("shortest-path reward=%.4f throughput=%.4f latency_ms=%.3f max_util_pct=%.2f\n", sp_rw / n,
              sp_tp / n, sp_lat / n, sp_util / n);
  return 0;
}

int cmd_ablate(const Options& o) {
  ExperimentRunner runner(resolve(o, Mode::ablate));
  for (const auto& row : runner.run_ablation()) print_summary(row.summary);
  return 0;
}

int cmd_sweep(const Options& o, Mode mode) {
  ExperimentRunner runner(resolve(o, mode));
  SweepResult result;
  if (mode == Mode::sweep_gamma) result = runner.run_gamma_sweep();
  else if (mode == Mode::sweep_sparsity) result = runner.run_sparsity_sweep();
  else result = runner.run_dim_sweep();
  print_series(emit_plot_data(result));
  return 0;
}

int cmd_check_grad(const Options& o) {
  const auto report = check_policy_gradient(o.seed, o.samples);
  const bool ok = report.max_rel_error < 1e-4;
  std::printf("max relative error %.3e at coordinate %ld over %zu coordinates: %s\n", report.max_rel_error,
              static_cast<long>(report.worst_coordinate), report.coordinates.size(), ok ? "ok" : "FAILED");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology-aware graph RL for hop-by-hop routing"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)");
    sub->add_option("--preset", o.preset, "desk or paper");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--epochs", o.epochs, "Override the epoch count");
  };

  auto* gen = app.add_subcommand("gen-topology", "Generate a clustered physical topology");
  gen->add_option("--seed", o.seed, "Generator seed");
  add_common(gen);

  auto* train = app.add_subcommand("train", "Train one run");
  train->add_option("--seed", o.seed, "Run seed");
  train->add_option("--variant", o.variant, "baseline, sase, pagu or full");
  train->add_option("--checkpoint", o.checkpoint, "Write a checkpoint after training");
  train->add_option("--resume", o.resume, "Resume from a checkpoint");
  add_common(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint against shortest-path routing");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--seed", o.seed, "Evaluation seed");
  eval->add_option("--episodes", o.episodes, "Episodes to roll out");

  std::vector<std::pair<CLI::App*, Mode>> experiments;
  for (auto [name, mode, help] : {std::tuple{"ablate", Mode::ablate, "Four-variant ablation"},
                                  std::tuple{"sweep-gamma", Mode::sweep_gamma, "Discount factor sweep"},
                                  std::tuple{"sweep-sparsity", Mode::sweep_sparsity, "Retention ratio sweep"},
                                  std::tuple{"sweep-dim", Mode::sweep_dim, "Feature dimension sweep"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--seeds", o.seeds, "Comma-separated seeds");
    add_common(sub);
    experiments.emplace_back(sub, mode);
  }

  auto* grad = app.add_subcommand("check-grad", "Finite-difference check of the full loss gradient");
  grad->add_option("--seed", o.seed, "Instance seed");
  grad->add_option("--samples", o.samples, "Coordinates to sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen_topology(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*grad) return cmd_check_grad(o);
    for (auto [sub, mode] : experiments) {
      if (!*sub) continue;
      return mode == Mode::ablate ? cmd_ablate(o) : cmd_sweep(o, mode);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
