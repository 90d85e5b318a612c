#include "mcce/vae/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "mcce/simd/kernels.hpp"

namespace mcce::vae {

void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const simd::AdamCoeffs coeffs{config.learning_rate, config.beta1, config.beta2, config.epsilon,
                                1.0 - std::pow(config.beta1, t), 1.0 - std::pow(config.beta2, t)};
  simd::active().adam_update(params.data(), grads.data(), state.m.data(), state.v.data(), n, coeffs);
}

}  // namespace mcce::vae
