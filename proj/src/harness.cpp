#include "tagrl/harness.hpp"

#include "tagrl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace tagrl {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<Mode, const char*> kModes[] = {
    {Mode::train, "train"},
    {Mode::eval, "eval"},
    {Mode::ablate, "ablate"},
    {Mode::sweep_gamma, "sweep_gamma"},
    {Mode::sweep_sparsity, "sweep_sparsity"},
    {Mode::sweep_dim, "sweep_dim"},
    {Mode::gen_topology, "gen_topology"},
    {Mode::check_grad, "check_grad"},
};

constexpr Variant kVariants[] = {Variant::baseline, Variant::sase, Variant::pagu, Variant::full};

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!j.is_object()) throw ValidationError(section + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ValidationError(section + ": unknown key '" + key + "'");
}

template <class T>
T get_as(const json& j, const char* key, const std::string& section) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(section + "." + key + ": wrong type");
  }
}

json generator_to_json(const GeneratorConfig& g) {
  return {{"n", g.n},
          {"clusters", g.clusters},
          {"p_intra", g.p_intra},
          {"p_inter", g.p_inter},
          {"min_edges", g.min_edges},
          {"capacity_lo", g.capacity_lo},
          {"capacity_hi", g.capacity_hi},
          {"latency_lo_ms", g.latency_lo_ms},
          {"latency_hi_ms", g.latency_hi_ms},
          {"max_attempts", g.max_attempts}};
}

void generator_from_json(const json& j, GeneratorConfig& g) {
  const std::string s = "topology";
  check_keys(j, {"n", "clusters", "p_intra", "p_inter", "min_edges", "capacity_lo", "capacity_hi",
                 "latency_lo_ms", "latency_hi_ms", "max_attempts"},
             s);
  if (j.contains("n")) g.n = get_as<int>(j, "n", s);
  if (j.contains("clusters")) g.clusters = get_as<int>(j, "clusters", s);
  if (j.contains("p_intra")) g.p_intra = get_as<double>(j, "p_intra", s);
  if (j.contains("p_inter")) g.p_inter = get_as<double>(j, "p_inter", s);
  if (j.contains("min_edges")) g.min_edges = get_as<int>(j, "min_edges", s);
  if (j.contains("capacity_lo")) g.capacity_lo = get_as<double>(j, "capacity_lo", s);
  if (j.contains("capacity_hi")) g.capacity_hi = get_as<double>(j, "capacity_hi", s);
  if (j.contains("latency_lo_ms")) g.latency_lo_ms = get_as<double>(j, "latency_lo_ms", s);
  if (j.contains("latency_hi_ms")) g.latency_hi_ms = get_as<double>(j, "latency_hi_ms", s);
  if (j.contains("max_attempts")) g.max_attempts = get_as<int>(j, "max_attempts", s);
}

json summary_to_json(const RunSummary& s) {
  return {{"variant", std::string(to_string(s.variant))},
          {"seed", s.seed},
          {"reward", s.reward},
          {"avg_throughput", s.avg_throughput},
          {"avg_latency_ms", s.avg_latency_ms},
          {"max_link_utilization_pct", s.max_link_utilization_pct},
          {"first_window_reward", s.first_window_reward},
          {"graph_update_calls", s.graph_update_calls},
          {"final_edge_count", s.final_edge_count}};
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::string value_label(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

std::string_view to_string(Mode m) {
  for (const auto& [mode, name] : kModes)
    if (mode == m) return name;
  return "train";
}

Mode parse_mode(std::string_view text) {
  for (const auto& [mode, name] : kModes)
    if (text == name) return mode;
  throw ValidationError("unknown mode '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ValidationError("seeds must be nonempty");
  if (final_window < 1) throw ValidationError("final_window must be at least 1");
  for (double g : sweep.gammas)
    if (!(g >= 0.0 && g < 1.0)) throw ValidationError("sweep gamma outside [0, 1)");
  for (double r : sweep.ratios)
    if (!(r > 0.0 && r <= 1.0)) throw ValidationError("retention ratio outside (0, 1]");
  for (int d : sweep.dims)
    if (d < 1) throw ValidationError("feature dimension must be positive");
  run.train.validate();
  run.update.validate();
}

ExperimentConfig preset_config(std::string_view preset) {
  ExperimentConfig c;
  c.preset = std::string(preset);
  if (preset == "paper") {
    c.topology = GeneratorConfig{};
    c.run.env.flows_per_episode = 32;
    c.run.train.batch = 32;
    c.run.train.epochs = 1000;
  } else if (preset == "desk") {
    c.topology.n = 12;
    c.topology.clusters = 3;
    c.topology.min_edges = 16;
    c.run.env.flows_per_episode = 8;
    c.run.train.batch = 8;
    c.run.train.epochs = 300;
    // k anchors cannot exceed the node count.
    c.run.model.encoder.positional = std::min(c.run.model.encoder.positional, c.topology.n);
  } else {
    throw ValidationError("unknown preset '" + std::string(preset) + "'");
  }
  return c;
}

ExperimentConfig experiment_from_json(const json& j) {
  const std::string s = "config";
  check_keys(j, {"mode", "variant", "seeds", "preset", "output_dir", "topology_seed", "topology",
                 "topology_file", "final_window", "sweep", "train", "env", "update", "model"},
             s);
  ExperimentConfig c = preset_config(j.contains("preset") ? get_as<std::string>(j, "preset", s) : "desk");
  if (j.contains("mode")) c.mode = parse_mode(get_as<std::string>(j, "mode", s));
  if (j.contains("variant")) c.run.variant = parse_variant(get_as<std::string>(j, "variant", s));
  if (j.contains("seeds")) c.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds", s);
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir", s);
  if (j.contains("topology_seed")) c.topology_seed = get_as<std::uint64_t>(j, "topology_seed", s);
  if (j.contains("topology")) generator_from_json(j.at("topology"), c.topology);
  if (j.contains("topology_file")) c.topology_file = get_as<std::string>(j, "topology_file", s);
  if (j.contains("final_window")) c.final_window = get_as<int>(j, "final_window", s);
  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    check_keys(sw, {"gammas", "ratios", "dims"}, "sweep");
    if (sw.contains("gammas")) c.sweep.gammas = get_as<std::vector<double>>(sw, "gammas", "sweep");
    if (sw.contains("ratios")) c.sweep.ratios = get_as<std::vector<double>>(sw, "ratios", "sweep");
    if (sw.contains("dims")) c.sweep.dims = get_as<std::vector<int>>(sw, "dims", "sweep");
  }
  if (j.contains("train")) from_json(j.at("train"), c.run.train);
  if (j.contains("env")) from_json(j.at("env"), c.run.env);
  if (j.contains("update")) from_json(j.at("update"), c.run.update);
  if (j.contains("model")) from_json(j.at("model"), c.run.model);
  c.validate();
  return c;
}

ExperimentConfig load_experiment(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  return experiment_from_json(j);
}

json to_json(const ExperimentConfig& c) {
  json j = {{"mode", std::string(to_string(c.mode))},
            {"variant", std::string(to_string(c.run.variant))},
            {"seeds", c.seeds},
            {"preset", c.preset},
            {"output_dir", c.output_dir.string()},
            {"topology_seed", c.topology_seed},
            {"topology", generator_to_json(c.topology)},
            {"final_window", c.final_window},
            {"sweep", {{"gammas", c.sweep.gammas}, {"ratios", c.sweep.ratios}, {"dims", c.sweep.dims}}},
            {"train", to_json(c.run.train)},
            {"env", to_json(c.run.env)},
            {"update", to_json(c.run.update)},
            {"model", to_json(c.run.model)}};
  if (c.topology_file) j["topology_file"] = c.topology_file->string();
  return j;
}

RunSummary summarize_run(const Trainer& trainer, int window) {
  RunSummary s;
  s.variant = trainer.config().variant;
  s.seed = trainer.seed();
  s.history = trainer.history();
  s.updates = trainer.update_log();
  s.graph_update_calls = trainer.graph_update_calls();
  s.final_edge_count = trainer.logical_graph().num_edges();
  const auto& h = s.history;
  if (h.empty()) return s;
  const std::size_t w = std::min(h.size(), static_cast<std::size_t>(window));
  for (std::size_t i = h.size() - w; i < h.size(); ++i) {
    s.reward += h[i].reward;
    s.avg_throughput += h[i].avg_throughput;
    s.avg_latency_ms += h[i].avg_latency_ms;
    s.max_link_utilization_pct += h[i].max_link_utilization_pct;
  }
  const double dw = static_cast<double>(w);
  s.reward /= dw;
  s.avg_throughput /= dw;
  s.avg_latency_ms /= dw;
  s.max_link_utilization_pct /= dw;
  for (std::size_t i = 0; i < w; ++i) s.first_window_reward += h[i].reward;
  s.first_window_reward /= dw;
  return s;
}

double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_stdev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

PlotSeries emit_plot_data(const SweepResult& result) {
  PlotSeries series;
  series.name = result.name;
  std::vector<double> order;
  std::map<double, std::vector<double>> by_value;
  for (const auto& p : result.points) {
    if (!by_value.count(p.value)) order.push_back(p.value);
    by_value[p.value].push_back(p.summary.reward);
  }
  for (double v : order) {
    const auto& rs = by_value[v];
    series.points.push_back({v, sample_mean(rs), sample_stdev(rs), static_cast<int>(rs.size())});
  }
  return series;
}

std::string plot_series_csv(const PlotSeries& series) {
  std::string out = "series,x,mean,stdev,count\n";
  for (const auto& p : series.points) {
    out += series.name + "," + format_value(p.x) + "," + format_value(p.mean) + "," +
           format_value(p.stdev) + "," + std::to_string(p.count) + "\n";
  }
  return out;
}

json plot_series_to_json(const PlotSeries& series) {
  json pts = json::array();
  for (const auto& p : series.points)
    pts.push_back({{"x", p.x}, {"mean", p.mean}, {"stdev", p.stdev}, {"count", p.count}});
  return {{"name", series.name}, {"metric", series.metric}, {"points", std::move(pts)}};
}

PlotSeries plot_series_from_json(const json& j) {
  try {
    PlotSeries s;
    s.name = j.at("name").get<std::string>();
    s.metric = j.at("metric").get<std::string>();
    for (const auto& p : j.at("points")) {
      s.points.push_back({p.at("x").get<double>(), p.at("mean").get<double>(),
                          p.at("stdev").get<double>(), p.at("count").get<int>()});
    }
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed plot series: ") + e.what());
  }
}

ExperimentRunner::ExperimentRunner(ExperimentConfig config)
    : config_(std::move(config)),
      topology_(config_.topology_file ? load_topology(*config_.topology_file)
                                      : generate_geant_like(config_.topology_seed, config_.topology)) {
  config_.validate();
}

void ExperimentRunner::write_manifest(const fs::path& dir, const json& extra) const {
  json m = {{"config", to_json(config_)}, {"topology", json::parse(topology_to_json(topology_))}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

RunSummary ExperimentRunner::run(const RunConfig& run, const PhysicalTopology& topology,
                                 std::uint64_t seed, const fs::path& dir) {
  const std::string key = to_json(run).dump() + "|" + topology_to_json(topology) + "|" + std::to_string(seed);
  auto it = memo_.find(key);
  if (it == memo_.end()) {
    Trainer trainer(topology, run, seed);
    trainer.train();
    ++trained_runs_;
    it = memo_.emplace(key, summarize_run(trainer, config_.final_window)).first;
  }
  const RunSummary& s = it->second;

  fs::create_directories(dir);
  std::string csv = metrics_csv_header() + "\n";
  for (const auto& r : s.history) csv += metrics_csv_row(r, seed) + "\n";
  write_text(dir / "metrics.csv", csv);
  std::string log;
  for (const auto& u : s.updates) log += u.to_json_line() + "\n";
  write_text(dir / "pagu_updates.jsonl", log);
  json m = {{"seed", seed},
            {"run", to_json(run)},
            {"topology", json::parse(topology_to_json(topology))},
            {"summary", summary_to_json(s)}};
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  return s;
}

std::vector<RunSummary> ExperimentRunner::run_training() {
  std::vector<RunSummary> out;
  const fs::path root = config_.output_dir / "train";
  for (auto seed : config_.seeds)
    out.push_back(run(config_.run, topology_, seed, root / ("seed_" + std::to_string(seed))));
  fs::create_directories(root);
  write_manifest(root, json::object());
  return out;
}

std::vector<AblationRow> ExperimentRunner::run_ablation() {
  std::vector<AblationRow> rows;
  const fs::path root = config_.output_dir / "ablation";
  for (Variant v : kVariants) {
    RunConfig rc = config_.run;
    rc.variant = v;
    for (auto seed : config_.seeds) {
      const fs::path dir = root / std::string(to_string(v)) / ("seed_" + std::to_string(seed));
      rows.push_back({v, run(rc, topology_, seed, dir)});
    }
  }
  fs::create_directories(root);
  write_text(root / "ablation.csv", ablation_csv(rows));
  write_text(root / "ablation_summary.csv", ablation_summary_csv(rows));
  write_manifest(root, json::object());
  return rows;
}

void ExperimentRunner::write_sweep(const SweepResult& result, const fs::path& dir) const {
  fs::create_directories(dir);
  std::string csv = result.name + ",seed,reward,avg_throughput,avg_latency_ms,max_link_utilization_pct\n";
  for (const auto& p : result.points) {
    const auto& s = p.summary;
    csv += format_value(p.value) + "," + std::to_string(s.seed) + "," + format_value(s.reward) + "," +
           format_value(s.avg_throughput) + "," + format_value(s.avg_latency_ms) + "," +
           format_value(s.max_link_utilization_pct) + "\n";
  }
  write_text(dir / (result.name + ".csv"), csv);
  const PlotSeries series = emit_plot_data(result);
  write_text(dir / "plot.csv", plot_series_csv(series));
  write_text(dir / "plot.json", plot_series_to_json(series).dump(2) + "\n");
  write_manifest(dir, json::object());
}

SweepResult ExperimentRunner::run_gamma_sweep() {
  SweepResult result{"gamma", {}};
  const fs::path root = config_.output_dir / "sweep_gamma";
  for (double g : config_.sweep.gammas) {
    RunConfig rc = config_.run;
    rc.train.gamma = g;
    for (auto seed : config_.seeds) {
      const fs::path dir = root / ("gamma_" + value_label(g)) / ("seed_" + std::to_string(seed));
      result.points.push_back({g, run(rc, topology_, seed, dir)});
    }
  }
  write_sweep(result, root);
  return result;
}

SweepResult ExperimentRunner::run_sparsity_sweep() {
  SweepResult result{"retention_ratio", {}};
  const fs::path root = config_.output_dir / "sweep_sparsity";
  for (double ratio : config_.sweep.ratios) {
    for (auto seed : config_.seeds) {
      const PhysicalTopology thinned = thin_topology(topology_, ratio, seed);
      const fs::path dir = root / ("ratio_" + value_label(ratio)) / ("seed_" + std::to_string(seed));
      result.points.push_back({ratio, run(config_.run, thinned, seed, dir)});
    }
  }
  write_sweep(result, root);
  return result;
}

SweepResult ExperimentRunner::run_dim_sweep() {
  SweepResult result{"feature_dim", {}};
  const fs::path root = config_.output_dir / "sweep_dim";
  for (int d : config_.sweep.dims) {
    RunConfig rc = config_.run;
    rc.model.encoder.feature = d;
    for (auto seed : config_.seeds) {
      const fs::path dir = root / ("dim_" + std::to_string(d)) / ("seed_" + std::to_string(seed));
      result.points.push_back({static_cast<double>(d), run(rc, topology_, seed, dir)});
    }
  }
  write_sweep(result, root);
  return result;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "variant,seed,reward,avg_throughput,avg_latency_ms,max_link_utilization_pct\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += std::string(to_string(r.variant)) + "," + std::to_string(s.seed) + "," + format_value(s.reward) +
           "," + format_value(s.avg_throughput) + "," + format_value(s.avg_latency_ms) + "," +
           format_value(s.max_link_utilization_pct) + "\n";
  }
  return out;
}

std::string ablation_summary_csv(const std::vector<AblationRow>& rows) {
  std::string out =
      "variant,runs,reward_mean,reward_stdev,avg_throughput_mean,avg_throughput_stdev,"
      "avg_latency_ms_mean,avg_latency_ms_stdev,max_link_utilization_pct_mean,"
      "max_link_utilization_pct_stdev\n";
  for (Variant v : kVariants) {
    std::vector<double> rw, tp, lat, util;
    for (const auto& r : rows) {
      if (r.variant != v) continue;
      rw.push_back(r.summary.reward);
      tp.push_back(r.summary.avg_throughput);
      lat.push_back(r.summary.avg_latency_ms);
      util.push_back(r.summary.max_link_utilization_pct);
    }
    if (rw.empty()) continue;
    out += std::string(to_string(v)) + "," + std::to_string(rw.size());
    for (const auto* xs : {&rw, &tp, &lat, &util})
      out += "," + format_value(sample_mean(*xs)) + "," + format_value(sample_stdev(*xs));
    out += "\n";
  }
  return out;
}

}  // namespace tagrl
