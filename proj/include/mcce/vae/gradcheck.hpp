#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mcce/vae/model.hpp"
#include "mcce/vae/network.hpp"

namespace mcce::vae {

struct GradientCheckResult {
  std::vector<std::size_t> coordinates;
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> relative_error;  // |g - fd| / max(|g|, |fd|, 1e-8)
  std::size_t skipped = 0;             // draws rejected for crossing a ReLU kink
  double max_relative_error = 0.0;
};

// Central differences of the one-sample ELBO on `count` distinct random
// coordinates. A coordinate whose +step or -step perturbation flips any
// ReLU activation is redrawn, since the objective is not differentiable
// across the kink.
GradientCheckResult check_gradients(const Network& net, const ModelParams& params, const ElboSample& sample,
                                    std::span<const double> eps, std::size_t count, double step,
                                    std::uint64_t seed);

}  // namespace mcce::vae
