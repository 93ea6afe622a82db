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
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace relfuse {

enum class Provenance : std::uint8_t
{
  generic,
  transfer,
};

std::string_view to_string(Provenance p);
Provenance       provenance_from_string(std::string_view text);

/// A held-out query and every answer that completes it in the source pool.
struct CompletionTask
{
  Slot                      slot{Slot::R};
  std::int32_t              fixed_a{0};
  std::int32_t              fixed_b{0};
  std::vector<std::int32_t> correct;  ///< ascending

  ConditionalQuery query() const
  {
    return {slot, fixed_a, fixed_b};
  }

  friend bool operator==(CompletionTask const &, CompletionTask const &) = default;
};

struct TestSet
{
  Slot                        slot{Slot::R};
  Provenance                  provenance{Provenance::generic};
  std::vector<CompletionTask> tasks;
  std::string                 vocab_hash;

  /// JSON lines, one task per line.
  void           save(std::string const &path) const;
  static TestSet load(std::string const &path);
};

struct CarveResult
{
  TestSet             testset;
  std::vector<Triple> pool;
};

/// The fixed pair of `t` for a task on `slot`.
std::pair<std::int32_t, std::int32_t> fixed_pair(Triple const &t, Slot slot);

/// The free-slot value of `t`.
std::int32_t free_value(Triple const &t, Slot slot);

/// Samples `n_pairs` distinct fixed pairs uniformly, records every completion
/// of each pair and removes all of those triples from the pool. When
/// `only_source` is set, only triples from that source are eligible.
CarveResult carve_test_set(std::span<Triple const> pool, Slot slot, std::size_t n_pairs,
                           std::uint64_t seed, std::optional<Source> only_source = std::nullopt);

/// Moves every structured triple touching a delete-token into tasks grouped by
/// fixed pair; co-occurrence triples stay in the pool.
CarveResult carve_transfer_split(std::span<Triple const> pool, std::set<TokenId> const &delete_tokens,
                                 Slot slot = Slot::R);

/// 1 / (1-based position of the first correct id in `ranking`), or 0 when
/// none appears. `correct` must be sorted.
double best_reciprocal_rank(std::span<std::int32_t const> ranking, std::span<std::int32_t const> correct);

double mrr_best(Embedding const &theta, TestSet const &testset);
double probability_mass(Embedding const &theta, TestSet const &testset);
double random_baseline(TestSet const &testset, std::size_t candidate_count);

struct MetricsReport
{
  double      mrr_best{0.0};
  double      mean_probability_mass{0.0};
  double      baseline_mass{0.0};
  std::size_t n_tasks{0};
  double      mean_correct_count{0.0};

  std::string          to_json() const;
  static MetricsReport from_json(std::string const &text);
  static std::string   csv_header();
  std::string          csv_row() const;

  friend bool operator==(MetricsReport const &, MetricsReport const &) = default;
};

/// Requires matching vocabulary fingerprints when both sides carry one.
MetricsReport evaluate(Embedding const &theta, TestSet const &testset);

}  // namespace relfuse
