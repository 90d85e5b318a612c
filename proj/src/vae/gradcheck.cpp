#include "mcce/vae/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcce/rng.hpp"

namespace mcce::vae {
namespace {

struct Probe {
  double elbo;
  std::vector<bool> mask;
};

Probe probe(const Network& net, const std::vector<double>& values, const Workspace& prepared) {
  Workspace ws = prepared;
  Probe p;
  p.elbo = net.evaluate(values, ws, 1, nullptr);
  for (const auto& a : ws.enc_act)
    for (double x : a) p.mask.push_back(x > 0.0);
  for (const auto& a : ws.dec_act)
    for (double x : a) p.mask.push_back(x > 0.0);
  return p;
}

}  // namespace

GradientCheckResult check_gradients(const Network& net, const ModelParams& params, const ElboSample& sample,
                                    std::span<const double> eps, std::size_t count, double step,
                                    std::uint64_t seed) {
  const std::size_t P = net.parameter_count();
  if (count > P) throw std::invalid_argument("check_gradients: more coordinates requested than parameters");
  const std::vector<double> grad = elbo_gradients(net, params, sample, eps);

  Workspace prepared = net.make_workspace(1);
  const std::vector<ElboSample> one{sample};
  const SampleBank bank = make_sample_bank(one, net.config());
  const std::size_t idx = 0;
  bank.gather(std::span<const std::size_t>(&idx, 1), prepared);
  std::copy(eps.begin(), eps.end(), prepared.eps.begin());
  const Probe base = probe(net, params.values, prepared);

  GradientCheckResult r;
  std::vector<bool> used(P, false);
  Rng rng = make_stream(seed, 0x4643);
  std::uniform_int_distribution<std::size_t> pick(0, P - 1);
  std::vector<double> theta = params.values;
  std::size_t attempts = 0;
  while (r.coordinates.size() < count) {
    if (++attempts > 100 * P) throw std::runtime_error("check_gradients: too many coordinates rejected");
    const std::size_t c = pick(rng);
    if (used[c]) continue;
    used[c] = true;
    theta[c] = params.values[c] + step;
    const Probe plus = probe(net, theta, prepared);
    theta[c] = params.values[c] - step;
    const Probe minus = probe(net, theta, prepared);
    theta[c] = params.values[c];
    if (plus.mask != base.mask || minus.mask != base.mask) {
      ++r.skipped;
      continue;
    }
    const double fd = (plus.elbo - minus.elbo) / (2.0 * step);
    const double g = grad[c];
    const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-8});
    r.coordinates.push_back(c);
    r.analytic.push_back(g);
    r.numeric.push_back(fd);
    r.relative_error.push_back(rel);
    r.max_relative_error = std::max(r.max_relative_error, rel);
  }
  return r;
}

}  // namespace mcce::vae
