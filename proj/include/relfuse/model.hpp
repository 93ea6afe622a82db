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

#include "relfuse/common.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace relfuse {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Norms below this are rejected as degenerate rather than clamped.
inline constexpr double kNormFloor = 1e-12;

/// Largest W*W*R for which full enumeration of the joint is permitted.
inline constexpr double kEnumerationLimit = 1e7;

enum class EnergyNormalizer : std::uint8_t
{
  object_norm,  ///< |v_o| * |G_r [c_s; 1]|
  frobenius,    ///< |v_o| * |G_r|_F * |[c_s; 1]|
};

std::string_view to_string(EnergyNormalizer n);
EnergyNormalizer energy_normalizer_from_string(std::string_view text);

/// Full parameter set: subject vectors c (W x d), object vectors v (W x d) and
/// one affine map per relation, stored as a d x (d+1) matrix acting on [c; 1].
struct Embedding
{
  Matrix              c;
  Matrix              v;
  std::vector<Matrix> G;
  EnergyNormalizer    normalizer{EnergyNormalizer::object_norm};
  std::string         vocab_hash;

  std::size_t tokens() const noexcept
  {
    return static_cast<std::size_t>(c.rows());
  }
  std::size_t relations() const noexcept
  {
    return G.size();
  }
  std::size_t dim() const noexcept
  {
    return static_cast<std::size_t>(c.cols());
  }

  /// Zero-valued parameters of the given shape.
  static Embedding zeros(std::size_t tokens, std::size_t relations, std::size_t dim,
                         EnergyNormalizer normalizer = EnergyNormalizer::object_norm);

  /// Throws when shapes disagree or any entry is non-finite.
  void validate() const;
};

/// The three fixed/free roles of a conditional query. `fixed_a` and `fixed_b`
/// are the two remaining ids in triple order: (r, o) for S, (s, o) for R and
/// (s, r) for O.
struct ConditionalQuery
{
  Slot          slot{Slot::R};
  std::int32_t  fixed_a{0};
  std::int32_t  fixed_b{0};
};

/// Compose a full triple from a query and a candidate for the free slot.
Triple complete(ConditionalQuery const &q, std::int32_t candidate);

/// Number of values the free slot can take.
std::size_t candidate_count(Embedding const &theta, Slot slot);

/// Negative cosine between v_o and G_r [c_s; 1].
double energy(Embedding const &theta, TokenId s, RelationId r, TokenId o);

/// log Z by enumeration of all W*W*R triples. Tiny worlds only.
double exact_log_partition(Embedding const &theta);

/// Energies of every candidate for the free slot, in id order.
std::vector<double> candidate_energies(Embedding const &theta, ConditionalQuery const &q);

/// exp(-E) normalized over the given energies.
std::vector<double> boltzmann_weights(std::span<double const> energies);

/// Indices ordered by ascending energy; ties keep index order.
std::vector<std::int32_t> rank_by_energy(std::span<double const> energies);

/// Softmax of negated energies over the free slot. Does not touch Z.
std::vector<double> conditional_distribution(Embedding const &theta, ConditionalQuery const &q);

/// Candidate ids from most to least probable; equal energies keep id order.
std::vector<std::int32_t> rank_completions(Embedding const &theta, ConditionalQuery const &q);

struct SaveOptions
{
  bool single_precision{false};  ///< lossy 32-bit export
};

void      save_model(Embedding const &theta, std::string const &path, SaveOptions options = {});
Embedding load_model(std::string const &path);

}  // namespace relfuse
