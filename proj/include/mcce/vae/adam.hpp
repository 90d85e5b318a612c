#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mcce::vae {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
  bool operator==(const AdamState&) const = default;
};

// Bias-corrected Adam descent step. Pass the gradient of the loss, i.e.
// minus the ELBO gradient, so that the step ascends the ELBO.
void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config);

}  // namespace mcce::vae
