// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "utg/rare/rare_latent.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "utg/rng.hpp"

namespace utg::rare {

void RarityParams::validate() const {
  if (!std::isfinite(mu_u) || !std::isfinite(sigma_u) || !(sigma_u > 0.0)) {
    throw std::invalid_argument("rarity parameters need finite mu_u and sigma_u > 0 (got mu_u=" +
                                std::to_string(mu_u) + ", sigma_u=" + std::to_string(sigma_u) + ")");
  }
}

double normal_pdf(double x, double mean, double stddev) {
  const double z = (x - mean) / stddev;
  return std::exp(-0.5 * z * z) / (stddev * std::sqrt(2.0 * std::numbers::pi));
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normalizing_constant(const RarityParams& p) {
  p.validate();
  // 1 - Phi(-r) = Phi(r); erfc form keeps precision when r is large.
  const double r = std::abs(p.mu_u) / p.sigma_u;
  return 2.0 * (1.0 - 0.5 * std::erfc(r / std::numbers::sqrt2));
}

double unnormalized_density(double x, const RarityParams& p) {
  const double m = std::abs(p.mu_u);
  return x >= 0.0 ? normal_pdf(x, m, p.sigma_u) : normal_pdf(x, -m, p.sigma_u);
}

double density_f(double x, const RarityParams& p) { return unnormalized_density(x, p) / normalizing_constant(p); }

std::vector<double> sample_exact_oracle(const RarityParams& p, std::size_t n, std::uint64_t seed) {
  p.validate();
  Rng rng(seed);
  std::normal_distribution<double> gauss(std::abs(p.mu_u), p.sigma_u);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // The truncation point sits at or below the mean, so each attempt is
    // accepted with probability >= 1/2.
    double y = gauss(rng);
    while (y < 0.0) y = gauss(rng);
    out.push_back(coin(rng) ? y : -y);
  }
  return out;
}

ChainResult run_metropolis(const RarityParams& p, std::size_t n, const ChainConfig& cfg) {
  p.validate();
  if (cfg.thinning == 0) throw std::invalid_argument("chain thinning must be >= 1");
  const double scale = cfg.proposal_scale.value_or(p.sigma_u);
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("proposal scale must be positive");

  const double m = std::abs(p.mu_u);
  const double inv_two_var = 1.0 / (2.0 * p.sigma_u * p.sigma_u);
  // log f up to a constant; the same expression covers both branches.
  auto log_target = [&](double x) {
    const double d = std::abs(x) - m;
    return -d * d * inv_two_var;
  };

  Rng rng(cfg.seed);
  std::normal_distribution<double> step(0.0, scale);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ChainResult result;
  result.draws.reserve(n);
  double x = m;
  double log_fx = log_target(x);
  std::size_t accepted = 0, proposed = 0;
  const std::size_t total = cfg.burn_in + n * cfg.thinning;
  for (std::size_t it = 0; it < total; ++it) {
    double y = x + step(rng);
    if (unit(rng) < 0.5) y = -y;
    const double log_fy = log_target(y);
    const double u = unit(rng);
    ++proposed;
    if (std::log(u) < log_fy - log_fx) {
      x = y;
      log_fx = log_fy;
      ++accepted;
    }
    if (it >= cfg.burn_in && (it - cfg.burn_in + 1) % cfg.thinning == 0) result.draws.push_back(x);
  }
  result.acceptance_rate = proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  return result;
}

std::vector<double> sample_metropolis(const RarityParams& p, std::size_t n, const ChainConfig& cfg) {
  return run_metropolis(p, n, cfg).draws;
}

std::vector<std::vector<double>> acquire_rare_latents(std::size_t count, std::size_t k, const RarityParams& p,
                                                      Sampler sampler, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("latent dimension must be >= 1");
  std::vector<double> flat;
  if (sampler == Sampler::kMetropolis) {
    ChainConfig cfg;
    cfg.seed = seed;
    flat = sample_metropolis(p, count * k, cfg);
  } else {
    flat = sample_exact_oracle(p, count * k, seed);
  }
  std::vector<std::vector<double>> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i].assign(flat.begin() + static_cast<std::ptrdiff_t>(i * k),
                  flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
  }
  return out;
}

std::vector<double> acquire_rare_latent(std::size_t k, const RarityParams& p, Sampler sampler, std::uint64_t seed) {
  return acquire_rare_latents(1, k, p, sampler, seed).front();
}

}  // namespace utg::rare
