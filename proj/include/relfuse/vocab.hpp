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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace relfuse {

/// Name of the relation emitted for windowed co-occurrence in free text.
inline constexpr std::string_view kCoOccurrenceRelation = "APPEARS_IN_SENTENCE_WITH";

enum class TokenKind : std::uint8_t
{
  word,
  concept_token,
};

struct TokenEntry
{
  TokenId       id{0};
  std::string   surface;
  TokenKind     kind{TokenKind::word};
  std::uint64_t count_structured{0};
  std::uint64_t count_unstructured{0};
};

struct RelationEntry
{
  RelationId    id{0};
  std::string   name;
  Source        source{Source::structured};
  std::uint64_t count{0};
};

/// A statement as read from a structured source, before id assignment.
struct RawTriple
{
  std::string s;
  std::string r;
  std::string o;

  friend bool operator==(RawTriple const &, RawTriple const &) = default;
};

using Sentence = std::vector<std::string>;

/// Token and relation catalogs. Ids are dense and assigned in insertion order.
/// Immutable once built; safe to share between threads.
class Vocabulary
{
public:
  TokenId    add_token(TokenEntry entry);
  RelationId add_relation(RelationEntry entry);

  std::size_t token_count() const noexcept
  {
    return tokens_.size();
  }
  std::size_t relation_count() const noexcept
  {
    return relations_.size();
  }

  TokenEntry const &token(TokenId id) const;
  RelationEntry const &relation(RelationId id) const;

  std::optional<TokenId>    token_id(std::string_view surface) const;
  std::optional<RelationId> relation_id(std::string_view name) const;

  /// Id of the co-occurrence relation, if the vocabulary has one.
  std::optional<RelationId> co_occurrence_relation() const;

  std::vector<TokenEntry> const &tokens() const noexcept
  {
    return tokens_;
  }
  std::vector<RelationEntry> const &relations() const noexcept
  {
    return relations_;
  }

  /// Surfaces sharing the longest common prefix with `query`, at most `limit`.
  std::vector<std::string> suggest(std::string_view query, std::size_t limit = 5) const;

  /// Fingerprint of the id assignment: surfaces, kinds, relation names and
  /// sources in id order. Counts are not included.
  std::string hash() const;

  void save(std::string const &token_path, std::string const &relation_path) const;
  static Vocabulary load(std::string const &token_path, std::string const &relation_path);

private:
  std::vector<TokenEntry>                      tokens_;
  std::vector<RelationEntry>                   relations_;
  std::unordered_map<std::string, TokenId>     token_index_;
  std::unordered_map<std::string, RelationId>  relation_index_;
};

struct TokenCounts
{
  std::uint64_t structured{0};
  std::uint64_t unstructured{0};

  std::uint64_t either() const noexcept
  {
    return structured > unstructured ? structured : unstructured;
  }

  friend bool operator==(TokenCounts const &, TokenCounts const &) = default;
};

struct FrequencyTable
{
  std::map<std::string, TokenCounts, std::less<>>   tokens;
  std::map<std::string, std::uint64_t, std::less<>> relations;
};

/// Occurrence counts per surface form and source. A token repeated inside one
/// record counts once per occurrence.
FrequencyTable count_frequencies(std::span<RawTriple const> triples,
                                 std::span<Sentence const>  sentences);

struct PruneResult
{
  std::vector<RawTriple> structured;
  std::vector<Sentence>  unstructured;
  Vocabulary             vocabulary;
};

/// Two rounds of record-level frequency thresholding. A token is kept in a
/// round when its count in either source reaches the threshold; records with
/// any token below it are dropped whole. The vocabulary lists surviving tokens
/// by descending total count, ties by surface. Tokens found in structured data
/// or listed in `concepts` are tagged as concepts.
PruneResult two_round_prune(std::span<RawTriple const>    structured,
                            std::span<Sentence const>     unstructured,
                            std::uint64_t                 min_round1 = 100,
                            std::uint64_t                 min_round2 = 50,
                            std::set<std::string> const  &concepts   = {});

struct RelationPruneResult
{
  std::vector<RawTriple>   structured;
  std::vector<std::string> retained;  ///< most frequent first
  std::vector<std::uint64_t> retained_counts;
};

/// Keeps statements whose relation is among the `k` most frequent. Ties at the
/// boundary go to the lexicographically smaller name.
RelationPruneResult retain_top_relations(std::span<RawTriple const> structured, std::size_t k = 20);

}  // namespace relfuse
