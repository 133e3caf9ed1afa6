#include "tagrl/gradcheck.hpp"

#include "tagrl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tagrl {

std::vector<Eigen::Index> sample_coordinates(Eigen::Index dim, int count, std::uint64_t seed) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(dim));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (count >= dim) return all;
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (int i = 0; i < count; ++i) {
    auto j = static_cast<std::size_t>(i) + uniform_index(rng, all.size() - static_cast<std::size_t>(i));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  all.resize(static_cast<std::size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

GradCheckReport finite_difference_check(const Eigen::VectorXd& theta, const LossClosure& loss,
                                        double epsilon, int samples, std::uint64_t seed) {
  Eigen::VectorXd analytic(theta.size());
  loss(theta, &analytic);

  GradCheckReport report;
  report.coordinates = sample_coordinates(theta.size(), samples, seed);
  Eigen::VectorXd probe = theta;
  for (Eigen::Index i : report.coordinates) {
    probe(i) = theta(i) + epsilon;
    const double up = loss(probe, nullptr);
    probe(i) = theta(i) - epsilon;
    const double down = loss(probe, nullptr);
    probe(i) = theta(i);
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic(i) - numeric) /
                       std::max(1e-8, std::abs(analytic(i)) + std::abs(numeric));
    if (report.worst_coordinate < 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_coordinate = i;
    }
  }
  return report;
}

}  // namespace tagrl
