#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The relfuse Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "relfuse/model.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace relfuse {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw, so that
/// streams are identical across standard library implementations.
double uniform01(Rng &rng);

/// Uniform integer in [0, n) by rejection; n > 0.
std::uint64_t uniform_index(Rng &rng, std::uint64_t n);

/// Inverse-CDF draw from a normalized probability vector.
std::size_t sample_categorical(std::span<double const> probabilities, Rng &rng);

/// Standard normal via Box-Muller on `uniform01`.
double standard_normal(Rng &rng);

/// One persistent Markov chain over triples.
struct ChainState
{
  Triple current;
  Rng    rng;
};

struct GibbsConfig
{
  int  rounds{3};
  int  n_chains{1};
  bool use_intermediate{false};  ///< also emit the states after earlier sweeps

  void validate() const;
};

/// Redraws one slot from its exact conditional given the other two.
void resample_slot(Embedding const &theta, ChainState &state, Slot slot);

/// One systematic scan in the order S, R, O.
void gibbs_sweep(Embedding const &theta, ChainState &state);

/// Advances every chain by `cfg.rounds` sweeps from where it stopped and
/// returns the final states (plus intermediates when requested).
std::vector<Triple> negative_samples(Embedding const &theta, std::span<ChainState> chains,
                                     GibbsConfig const &cfg);

/// Chains started at uniformly drawn triples of `batch`, each with its own
/// generator seeded from `seed`.
std::vector<ChainState> init_chains(std::span<Triple const> batch, int n_chains, std::uint64_t seed);

}  // namespace relfuse
