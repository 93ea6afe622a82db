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
#include "relfuse/vocab.hpp"

#include <cstdint>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace relfuse {

inline constexpr std::string_view kNumberToken = "NUMBER";

/// Optional user rules mapping numeric-looking tokens to class tokens such as
/// YEAR or HEIGHT. Rules are tried in order against the raw token; the first
/// full match wins. Tokens no rule matches fall back to NUMBER.
class NumberClasses
{
public:
  void add(std::string const &pattern, std::string token);

  /// TSV: pattern <TAB> class token.
  static NumberClasses load(std::string const &path);

  std::optional<std::string> classify(std::string_view raw) const;

private:
  std::vector<std::pair<std::regex, std::string>> rules_;
};

/// Lowercases, replaces numeric literals with class tokens, strips
/// punctuation except hyphens inside words and splits on whitespace.
/// Returns nothing when no token survives.
std::optional<Sentence> preprocess_text(std::string_view raw_line, NumberClasses const *classes = nullptr);

/// Multiword strings (space-joined, lowercase) mapped to concept tokens.
class Lexicon
{
public:
  void add(std::string const &phrase, std::string concept_token);

  /// TSV: phrase <TAB> concept token.
  static Lexicon load(std::string const &path);

  bool empty() const noexcept
  {
    return entries_.empty();
  }

  std::optional<std::string> find(std::string const &phrase) const;
  std::size_t                max_words() const noexcept
  {
    return max_words_;
  }
  std::vector<std::string> concepts() const;

private:
  std::unordered_map<std::string, std::string> entries_;
  std::size_t                                  max_words_{0};
};

/// Left-to-right scan replacing the longest lexicon match at each position.
Sentence greedy_concept_match(Sentence const &sentence, Lexicon const &lexicon);

/// (t_i, relation, t_j) for every ordered pair with 1 <= j - i <= window.
std::vector<Triple> window_cooccurrence(std::span<TokenId const> sentence, RelationId relation,
                                        std::size_t window = 5);

/// Number of pairs `window_cooccurrence` emits for a sentence of n tokens.
std::size_t cooccurrence_count(std::size_t n, std::size_t window);

/// Reads the triple TSV format (subject, relation, object; '#' comments).
std::vector<RawTriple> read_raw_triples(std::string const &path);

enum class UnknownPolicy : std::uint8_t
{
  skip,
  fail,
};

struct LoadReport
{
  std::size_t              skipped{0};
  std::vector<std::string> unknown;  ///< first few offending entries
};

/// Triple TSV resolved against `vocab`. The source of each triple follows
/// its relation's source.
std::vector<Triple> load_structured(std::string const &path, Vocabulary const &vocab,
                                    UnknownPolicy policy = UnknownPolicy::fail,
                                    LoadReport *report = nullptr);

/// Writes triples in the same TSV format, surfaces resolved through `vocab`.
void save_triples(std::string const &path, std::span<Triple const> triples, Vocabulary const &vocab);

struct MixSpec
{
  std::size_t   n_structured{0};
  std::size_t   n_unstructured{0};
  std::uint64_t seed{0};
};

/// Uniform draws without replacement from each source, then one shuffle.
std::vector<Triple> mix_datasets(std::span<Triple const> structured, std::span<Triple const> unstructured,
                                 MixSpec const &spec);

struct SyntheticWorld
{
  Embedding           truth;
  std::vector<Triple> triples;
};

/// Planted world: unit token vectors and relation maps made of a random
/// rotation plus a small translation. Triples are drawn from the exact joint
/// by enumeration.
SyntheticWorld generate_synthetic_world(std::size_t n_tokens, std::size_t n_relations, std::size_t dim,
                                        std::size_t n_triples, std::uint64_t seed);

/// Vocabulary for a synthetic world: tokens t0.., relations r0.., with
/// structured counts taken from `triples`.
Vocabulary synthetic_vocabulary(std::size_t n_tokens, std::size_t n_relations, std::span<Triple const> triples = {});

}  // namespace relfuse
