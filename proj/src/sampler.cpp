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

#include "relfuse/sampler.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace relfuse {

double uniform01(Rng &rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_index(Rng &rng, std::uint64_t n)
{
  // Rejection keeps the draw exactly uniform for any n.
  auto const limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do
  {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::size_t sample_categorical(std::span<double const> probabilities, Rng &rng)
{
  auto const u   = uniform01(rng);
  double     cum = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i)
  {
    cum += probabilities[i];
    if (u < cum)
    {
      return i;
    }
  }
  // Rounding left the total just under u; fall back to the last non-zero entry.
  for (std::size_t i = probabilities.size(); i-- > 0;)
  {
    if (probabilities[i] > 0.0)
    {
      return i;
    }
  }
  return probabilities.size() - 1;
}

double standard_normal(Rng &rng)
{
  double u1 = uniform01(rng);
  while (u1 <= 0.0)
  {
    u1 = uniform01(rng);
  }
  auto const u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void GibbsConfig::validate() const
{
  if (rounds < 1)
  {
    fail(ErrorKind::usage, "gibbs rounds must be at least 1");
  }
  if (n_chains < 1)
  {
    fail(ErrorKind::usage, "gibbs n_chains must be at least 1");
  }
}

void resample_slot(Embedding const &theta, ChainState &state, Slot slot)
{
  auto &t = state.current;
  ConditionalQuery q;
  q.slot = slot;
  switch (slot)
  {
  case Slot::S:
    q.fixed_a = t.r;
    q.fixed_b = t.o;
    break;
  case Slot::R:
    q.fixed_a = t.s;
    q.fixed_b = t.o;
    break;
  case Slot::O:
    q.fixed_a = t.s;
    q.fixed_b = t.r;
    break;
  }
  auto const probs = conditional_distribution(theta, q);
  auto const draw  = static_cast<std::int32_t>(sample_categorical(probs, state.rng));
  switch (slot)
  {
  case Slot::S:
    t.s = draw;
    break;
  case Slot::R:
    t.r = draw;
    break;
  case Slot::O:
    t.o = draw;
    break;
  }
}

void gibbs_sweep(Embedding const &theta, ChainState &state)
{
  resample_slot(theta, state, Slot::S);
  resample_slot(theta, state, Slot::R);
  resample_slot(theta, state, Slot::O);
}

std::vector<Triple> negative_samples(Embedding const &theta, std::span<ChainState> chains, GibbsConfig const &cfg)
{
  cfg.validate();
  if (chains.empty())
  {
    fail(ErrorKind::usage, "negative phase needs at least one chain");
  }
  std::vector<Triple> samples;
  samples.reserve(chains.size() * static_cast<std::size_t>(cfg.use_intermediate ? cfg.rounds : 1));
  for (auto &chain : chains)
  {
    for (int round = 0; round < cfg.rounds; ++round)
    {
      gibbs_sweep(theta, chain);
      if (cfg.use_intermediate || round + 1 == cfg.rounds)
      {
        samples.push_back(chain.current);
      }
    }
  }
  return samples;
}

std::vector<ChainState> init_chains(std::span<Triple const> batch, int n_chains, std::uint64_t seed)
{
  if (batch.empty())
  {
    fail(ErrorKind::usage, "cannot initialise chains from an empty batch");
  }
  if (n_chains < 1)
  {
    fail(ErrorKind::usage, "gibbs n_chains must be at least 1");
  }
  Rng                     seeder(seed);
  std::vector<ChainState> chains;
  chains.reserve(static_cast<std::size_t>(n_chains));
  for (int i = 0; i < n_chains; ++i)
  {
    ChainState chain{batch[uniform_index(seeder, batch.size())], Rng(seeder())};
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace relfuse
