#include "tagrl/error.hpp"
#include "tagrl/trainer.hpp"

#include <set>
#include <string>

namespace tagrl {

using json = nlohmann::json;

namespace {

// Reads optional keys into fields; anything left over is an error.
class Fields {
 public:
  Fields(const json& j, std::string section) : j_(j), section_(std::move(section)) {
    if (!j_.is_object()) throw ValidationError(section_ + ": expected an object");
  }

  template <class T>
  Fields& read(const char* key, T& field) {
    seen_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        field = it->get<T>();
      } catch (const json::exception&) {
        throw ValidationError(section_ + "." + key + ": wrong type");
      }
    }
    return *this;
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ValidationError(section_ + ": unknown key '" + key + "'");
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

}  // namespace

json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"weight_decay", c.weight_decay},
          {"lr_decay", c.lr_decay},
          {"lr_decay_every", c.lr_decay_every},
          {"entropy_coef", c.entropy_coef},
          {"gamma", c.gamma},
          {"batch", c.batch},
          {"epochs", c.epochs},
          {"baseline_decay", c.baseline_decay},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps}};
}

json to_json(const EnvConfig& c) {
  return {{"flows_per_episode", c.flows_per_episode},
          {"demand_lo", c.demand_lo},
          {"demand_hi", c.demand_hi},
          {"ttl_factor", c.ttl_factor},
          {"hop_cost", c.hop_cost},
          {"overload_coef", c.overload_coef},
          {"deliver_bonus", c.deliver_bonus},
          {"drop_penalty", c.drop_penalty},
          {"congestion_gain", c.congestion_gain},
          {"util_cap", c.util_cap},
          {"w_throughput", c.w_throughput},
          {"w_latency", c.w_latency},
          {"w_util", c.w_util},
          {"carry_loads", c.carry_loads}};
}

json to_json(const UpdateConfig& c) {
  return {{"deviation_threshold", c.deviation_threshold},
          {"tau_retain", c.tau_retain},
          {"gamma_add", c.gamma_add},
          {"window", c.window},
          {"guard_lo", c.guard_lo},
          {"guard_hi", c.guard_hi},
          {"probe_states", c.probe_states},
          {"epsilon", c.epsilon},
          {"candidate_cap_factor", c.candidate_cap_factor}};
}

json to_json(const ModelConfig& c) {
  return {{"feature", c.encoder.feature},
          {"hidden", c.encoder.hidden},
          {"positional", c.encoder.positional},
          {"head_hidden", c.head_hidden}};
}

json to_json(const RunConfig& c) {
  return {{"variant", std::string(to_string(c.variant))},
          {"train", to_json(c.train)},
          {"env", to_json(c.env)},
          {"update", to_json(c.update)},
          {"model", to_json(c.model)}};
}

void from_json(const json& j, TrainConfig& c) {
  Fields f(j, "train");
  f.read("lr", c.lr)
      .read("weight_decay", c.weight_decay)
      .read("lr_decay", c.lr_decay)
      .read("lr_decay_every", c.lr_decay_every)
      .read("entropy_coef", c.entropy_coef)
      .read("gamma", c.gamma)
      .read("batch", c.batch)
      .read("epochs", c.epochs)
      .read("baseline_decay", c.baseline_decay)
      .read("adam_beta1", c.adam_beta1)
      .read("adam_beta2", c.adam_beta2)
      .read("adam_eps", c.adam_eps);
  f.finish();
}

void from_json(const json& j, EnvConfig& c) {
  Fields f(j, "env");
  f.read("flows_per_episode", c.flows_per_episode)
      .read("demand_lo", c.demand_lo)
      .read("demand_hi", c.demand_hi)
      .read("ttl_factor", c.ttl_factor)
      .read("hop_cost", c.hop_cost)
      .read("overload_coef", c.overload_coef)
      .read("deliver_bonus", c.deliver_bonus)
      .read("drop_penalty", c.drop_penalty)
      .read("congestion_gain", c.congestion_gain)
      .read("util_cap", c.util_cap)
      .read("w_throughput", c.w_throughput)
      .read("w_latency", c.w_latency)
      .read("w_util", c.w_util)
      .read("carry_loads", c.carry_loads);
  f.finish();
}

void from_json(const json& j, UpdateConfig& c) {
  Fields f(j, "update");
  f.read("deviation_threshold", c.deviation_threshold)
      .read("tau_retain", c.tau_retain)
      .read("gamma_add", c.gamma_add)
      .read("window", c.window)
      .read("guard_lo", c.guard_lo)
      .read("guard_hi", c.guard_hi)
      .read("probe_states", c.probe_states)
      .read("epsilon", c.epsilon)
      .read("candidate_cap_factor", c.candidate_cap_factor);
  f.finish();
}

void from_json(const json& j, ModelConfig& c) {
  Fields f(j, "model");
  f.read("feature", c.encoder.feature)
      .read("hidden", c.encoder.hidden)
      .read("positional", c.encoder.positional)
      .read("head_hidden", c.head_hidden);
  f.finish();
}

void from_json(const json& j, RunConfig& c) {
  Fields f(j, "run");
  std::string variant(to_string(c.variant));
  f.read("variant", variant);
  c.variant = parse_variant(variant);
  if (const auto* s = f.sub("train")) from_json(*s, c.train);
  if (const auto* s = f.sub("env")) from_json(*s, c.env);
  if (const auto* s = f.sub("update")) from_json(*s, c.update);
  if (const auto* s = f.sub("model")) from_json(*s, c.model);
  f.finish();
}

}  // namespace tagrl
