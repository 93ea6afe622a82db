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
#include "relfuse/sampler.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace relfuse {

struct TrainConfig
{
  double           learning_rate{0.001};
  std::size_t      batch_size{100};
  std::size_t      dim{100};
  double           l2_G{0.01};
  GibbsConfig      gibbs{};
  double           offtask_prefactor{1.0};
  double           adam_beta1{0.9};
  double           adam_beta2{0.999};
  double           adam_epsilon{1e-8};
  int              patience{5};
  int              max_epochs{50};
  double           validation_fraction{0.1};
  std::uint64_t    seed{0};
  EnergyNormalizer normalizer{EnergyNormalizer::object_norm};

  /// Throws a usage error naming the first offending field.
  void validate() const;

  /// Reads `key = value` lines; '#' starts a comment. Unknown keys are errors.
  static TrainConfig parse(std::string const &text);
  static TrainConfig load(std::string const &path);
  std::string        to_text() const;
};

/// Same block layout as Embedding. Entries are ascent directions.
struct Gradient
{
  Matrix              c;
  Matrix              v;
  std::vector<Matrix> G;

  static Gradient zeros_like(Embedding const &theta);
  void            set_zero();
};

struct AdamState
{
  Gradient      first;
  Gradient      second;
  std::uint64_t step{0};

  static AdamState zeros_like(Embedding const &theta);
};

/// Adds scale * d(-E(s, r, o))/dTheta into `out`.
void accumulate_neg_energy_gradient(Embedding const &theta, Triple const &t, double scale, Gradient &out);

/// Ascent direction of the mean log-likelihood: positive phase over `batch`
/// as a weighted mean (co-occurrence triples weighted by the off-task
/// prefactor, structured ones by 1), minus the mean negative phase over
/// `negatives`, minus 2 * l2_G * G.
Gradient batch_gradient(Embedding const &theta, std::span<Triple const> batch,
                        std::span<Triple const> negatives, TrainConfig const &cfg);

/// Bias-corrected Adam ascent step.
void adam_update(Embedding &theta, Gradient const &grad, AdamState &state, TrainConfig const &cfg);

/// Mean log P(r | s, o) over held-out triples.
double validation_metric(Embedding const &theta, std::span<Triple const> heldout);

/// c, v ~ N(0, 1/d); G = [I | 0] + N(0, 0.01^2).
Embedding initialize_embedding(std::size_t tokens, std::size_t relations, std::size_t dim,
                               EnergyNormalizer normalizer, std::uint64_t seed);

struct EpochRecord
{
  int    epoch{0};
  double validation_metric{0.0};
  double wall_seconds{0.0};
};

struct TrainReport
{
  std::vector<EpochRecord> epochs;
  int                      stopping_epoch{0};
  int                      best_epoch{0};
  double                   best_metric{0.0};
  std::string              model_path;
};

struct FitResult
{
  Embedding   theta;
  TrainReport report;
};

using EpochCallback = std::function<void(EpochRecord const &)>;

/// Stochastic maximum likelihood with persistent contrastive divergence.
/// Parameters start from initialize_embedding(..., cfg.seed).
/// A validation split is carved from `pool` by seed; training stops after
/// `patience` epochs without improvement or at `max_epochs`, and the
/// best-validation parameters are returned.
FitResult fit(std::span<Triple const> pool, std::size_t tokens, std::size_t relations,
              TrainConfig const &cfg, EpochCallback on_epoch = {});

}  // namespace relfuse
