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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace utg::rare {

/// Rarity knobs (mu_u, sigma_u). Only |mu_u| enters the density.
struct RarityParams {
  double mu_u = 0.0;
  double sigma_u = 1.0;

  /// Throws std::invalid_argument unless sigma_u > 0 and both are finite.
  void validate() const;
  friend bool operator==(const RarityParams&, const RarityParams&) = default;
};

double normal_pdf(double x, double mean, double stddev);
double standard_normal_cdf(double x);

/// A = 2 (1/2 + integral_0^|mu| Normal(x, |mu|, sigma) dx) = 2 (1 - Phi(-|mu|/sigma)).
/// Lies in [1, 2) and depends on the parameters only through |mu|/sigma.
double normalizing_constant(const RarityParams& p);

/// Density numerator: Normal(x, +|mu|, sigma) for x >= 0, Normal(x, -|mu|, sigma)
/// for x < 0. Integrates to normalizing_constant(p).
double unnormalized_density(double x, const RarityParams& p);

/// Rare-latent density f(x) = unnormalized_density(x) / A. Symmetric in x.
double density_f(double x, const RarityParams& p);

/// Exact i.i.d. draws from f: a fair sign times a draw from Normal(|mu|, sigma)
/// truncated to [0, inf). Independent of the Metropolis path.
std::vector<double> sample_exact_oracle(const RarityParams& p, std::size_t n, std::uint64_t seed);

struct ChainConfig {
  /// Random-walk step standard deviation; sigma_u when unset.
  std::optional<double> proposal_scale;
  std::size_t burn_in = 1000;
  std::size_t thinning = 10;
  std::uint64_t seed = 0;
};

struct ChainResult {
  std::vector<double> draws;
  double acceptance_rate = 0.0;
};

/// Metropolis chain targeting f. Each proposal is a Gaussian random-walk step
/// followed by a sign flip with probability 1/2; both moves are symmetric so
/// the plain Metropolis ratio f(y)/f(x) applies (A cancels). The flip lets
/// the chain cross between the two modes when |mu|/sigma is large.
ChainResult run_metropolis(const RarityParams& p, std::size_t n, const ChainConfig& cfg);
std::vector<double> sample_metropolis(const RarityParams& p, std::size_t n, const ChainConfig& cfg);

enum class Sampler { kMetropolis, kExact };

/// `count` latent vectors of length k whose components are i.i.d. from f.
/// With the Metropolis sampler all vectors come from one chain, consumed in
/// order after burn-in and thinning.
std::vector<std::vector<double>> acquire_rare_latents(std::size_t count, std::size_t k, const RarityParams& p,
                                                      Sampler sampler, std::uint64_t seed);
std::vector<double> acquire_rare_latent(std::size_t k, const RarityParams& p, Sampler sampler, std::uint64_t seed);

}  // namespace utg::rare
