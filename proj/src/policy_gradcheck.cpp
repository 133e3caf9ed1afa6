#include "tagrl/rng.hpp"
#include "tagrl/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace tagrl {

GradCheckInstance make_gradcheck_instance(std::uint64_t seed) {
  GeneratorConfig gen;
  gen.n = 6;
  gen.clusters = 2;
  gen.min_edges = 7;
  const PhysicalTopology topology = generate_geant_like(mix_seed(seed, 0x6c), gen);

  GradCheckInstance inst;
  inst.config.variant = Variant::full;
  inst.config.env.flows_per_episode = 2;
  inst.config.train.batch = 2;
  inst.config.model.encoder.positional = topology.num_nodes();
  Trainer trainer(topology, inst.config, seed);
  inst.model = trainer.model();
  inst.params = trainer.params();
  inst.batch = trainer.rollout_batch(0);
  // Off-center baseline so the advantage term is not degenerate.
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& traj : inst.batch) {
    for (const auto& s : traj.steps) sum += s.reward;
    count += traj.steps.size();
  }
  inst.baseline = count ? 0.5 * sum / static_cast<double>(count) : 0.0;
  return inst;
}

GradCheckReport check_policy_gradient(std::uint64_t seed, int samples, bool corrupt) {
  const GradCheckInstance inst = make_gradcheck_instance(seed);
  const Eigen::VectorXd theta = flatten(inst.params);
  const auto coords = sample_coordinates(theta.size(), samples, seed);

  Eigen::Index corrupted = -1;
  if (corrupt) {
    PolicyParams g;
    policy_loss(inst.params, inst.model, inst.batch, inst.baseline, inst.config.train, &g);
    const Eigen::VectorXd flat = flatten(g);
    double best = -1.0;
    for (Eigen::Index c : coords) {
      if (std::abs(flat(c)) > best) {
        best = std::abs(flat(c));
        corrupted = c;
      }
    }
  }

  PolicyParams scratch = inst.params;
  const LossClosure loss = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    unflatten(x, scratch);
    PolicyParams g;
    const auto l = policy_loss(scratch, inst.model, inst.batch, inst.baseline, inst.config.train,
                               grad ? &g : nullptr);
    if (grad) {
      *grad = flatten(g);
      if (corrupted >= 0) (*grad)(corrupted) *= 1.01;
    }
    return l.total;
  };
  return finite_difference_check(theta, loss, 1e-5, samples, seed);
}

}  // namespace tagrl
