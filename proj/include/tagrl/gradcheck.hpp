#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace tagrl {

// Returns the loss at theta; fills *grad with the analytic gradient when given.
using LossClosure = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad)>;

// Distinct coordinates in [0, dim), sorted; all of them when count >= dim.
std::vector<Eigen::Index> sample_coordinates(Eigen::Index dim, int count, std::uint64_t seed);

struct GradCheckReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_coordinate = -1;
  std::vector<Eigen::Index> coordinates;
};

// Central differences on sampled coordinates. Relative error per coordinate is
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckReport finite_difference_check(const Eigen::VectorXd& theta, const LossClosure& loss,
                                        double epsilon = 1e-5, int samples = 200,
                                        std::uint64_t seed = 0);

}  // namespace tagrl
