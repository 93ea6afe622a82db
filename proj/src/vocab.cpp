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

#include "relfuse/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace relfuse {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line)
{
  std::vector<std::string_view> fields;
  std::size_t                   start = 0;
  while (true)
  {
    auto const pos = line.find('\t', start);
    if (pos == std::string_view::npos)
    {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t parse_count(std::string_view text, std::string const &where)
{
  std::uint64_t value = 0;
  if (text.empty())
  {
    fail(ErrorKind::data, where + ": empty numeric field");
  }
  for (char ch : text)
  {
    if (ch < '0' || ch > '9')
    {
      fail(ErrorKind::data, where + ": invalid number '" + std::string(text) + "'");
    }
    value = value * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  return value;
}

std::string_view to_string(TokenKind kind)
{
  return kind == TokenKind::word ? "word" : "concept";
}

TokenKind token_kind_from_string(std::string_view text, std::string const &where)
{
  if (text == "word")
  {
    return TokenKind::word;
  }
  if (text == "concept")
  {
    return TokenKind::concept_token;
  }
  fail(ErrorKind::data, where + ": unknown token kind '" + std::string(text) + "'");
}

// Records survive when every token passes `keep`.
template <typename Keep>
void filter_records(std::vector<RawTriple> &triples, std::vector<Sentence> &sentences, Keep keep)
{
  std::erase_if(triples, [&](RawTriple const &t) { return !keep(t.s) || !keep(t.o); });
  std::erase_if(sentences, [&](Sentence const &s) {
    return std::any_of(s.begin(), s.end(), [&](std::string const &w) { return !keep(w); });
  });
}

}  // namespace

TokenId Vocabulary::add_token(TokenEntry entry)
{
  if (token_index_.contains(entry.surface))
  {
    fail(ErrorKind::data, "duplicate token surface '" + entry.surface + "'");
  }
  entry.id = static_cast<TokenId>(tokens_.size());
  token_index_.emplace(entry.surface, entry.id);
  tokens_.push_back(std::move(entry));
  return tokens_.back().id;
}

RelationId Vocabulary::add_relation(RelationEntry entry)
{
  if (relation_index_.contains(entry.name))
  {
    fail(ErrorKind::data, "duplicate relation name '" + entry.name + "'");
  }
  if (entry.source == Source::co_occurrence && co_occurrence_relation())
  {
    fail(ErrorKind::data, "vocabulary already has a co-occurrence relation");
  }
  entry.id = static_cast<RelationId>(relations_.size());
  relation_index_.emplace(entry.name, entry.id);
  relations_.push_back(std::move(entry));
  return relations_.back().id;
}

TokenEntry const &Vocabulary::token(TokenId id) const
{
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
  {
    fail(ErrorKind::data, "token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

RelationEntry const &Vocabulary::relation(RelationId id) const
{
  if (id < 0 || static_cast<std::size_t>(id) >= relations_.size())
  {
    fail(ErrorKind::data, "relation id " + std::to_string(id) + " out of range");
  }
  return relations_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::token_id(std::string_view surface) const
{
  auto it = token_index_.find(std::string(surface));
  if (it == token_index_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

std::optional<RelationId> Vocabulary::relation_id(std::string_view name) const
{
  auto it = relation_index_.find(std::string(name));
  if (it == relation_index_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

std::optional<RelationId> Vocabulary::co_occurrence_relation() const
{
  for (auto const &rel : relations_)
  {
    if (rel.source == Source::co_occurrence)
    {
      return rel.id;
    }
  }
  return std::nullopt;
}

std::vector<std::string> Vocabulary::suggest(std::string_view query, std::size_t limit) const
{
  auto common_prefix = [&](std::string const &s) {
    std::size_t n = 0;
    while (n < s.size() && n < query.size() && s[n] == query[n])
    {
      ++n;
    }
    return n;
  };

  std::vector<std::pair<std::size_t, std::string const *>> scored;
  scored.reserve(tokens_.size() + relations_.size());
  for (auto const &t : tokens_)
  {
    scored.emplace_back(common_prefix(t.surface), &t.surface);
  }
  for (auto const &r : relations_)
  {
    scored.emplace_back(common_prefix(r.name), &r.name);
  }
  std::stable_sort(scored.begin(), scored.end(), [](auto const &a, auto const &b) {
    if (a.first != b.first)
    {
      return a.first > b.first;
    }
    return *a.second < *b.second;
  });

  std::vector<std::string> out;
  for (auto const &[len, surface] : scored)
  {
    if (out.size() == limit || len == 0)
    {
      break;
    }
    out.push_back(*surface);
  }
  return out;
}

std::string Vocabulary::hash() const
{
  Fnv1a h;
  for (auto const &t : tokens_)
  {
    h.update(t.surface);
    h.update("\t");
    h.update(to_string(t.kind));
    h.update("\n");
  }
  h.update("--\n");
  for (auto const &r : relations_)
  {
    h.update(r.name);
    h.update("\t");
    h.update(to_string(r.source));
    h.update("\n");
  }
  return h.hex();
}

void Vocabulary::save(std::string const &token_path, std::string const &relation_path) const
{
  std::ofstream tok(token_path, std::ios::binary);
  if (!tok)
  {
    fail(ErrorKind::data, "cannot write '" + token_path + "'");
  }
  for (auto const &t : tokens_)
  {
    tok << t.id << '\t' << t.surface << '\t' << to_string(t.kind) << '\t' << t.count_structured << '\t'
        << t.count_unstructured << '\n';
  }

  std::ofstream rel(relation_path, std::ios::binary);
  if (!rel)
  {
    fail(ErrorKind::data, "cannot write '" + relation_path + "'");
  }
  for (auto const &r : relations_)
  {
    rel << r.id << '\t' << r.name << '\t' << to_string(r.source) << '\t' << r.count << '\n';
  }
}

Vocabulary Vocabulary::load(std::string const &token_path, std::string const &relation_path)
{
  Vocabulary vocab;

  std::ifstream tok(token_path);
  if (!tok)
  {
    fail(ErrorKind::data, "cannot open '" + token_path + "'");
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(tok, line))
  {
    ++lineno;
    if (line.empty())
    {
      continue;
    }
    auto const where  = token_path + ":" + std::to_string(lineno);
    auto const fields = split_tabs(line);
    if (fields.size() != 5)
    {
      fail(ErrorKind::data, where + ": expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    }
    TokenEntry entry;
    entry.surface            = std::string(fields[1]);
    entry.kind               = token_kind_from_string(fields[2], where);
    entry.count_structured   = parse_count(fields[3], where);
    entry.count_unstructured = parse_count(fields[4], where);
    if (parse_count(fields[0], where) != vocab.tokens_.size())
    {
      fail(ErrorKind::data, where + ": token ids must be dense and in order");
    }
    vocab.add_token(std::move(entry));
  }

  std::ifstream rel(relation_path);
  if (!rel)
  {
    fail(ErrorKind::data, "cannot open '" + relation_path + "'");
  }
  lineno = 0;
  while (std::getline(rel, line))
  {
    ++lineno;
    if (line.empty())
    {
      continue;
    }
    auto const where  = relation_path + ":" + std::to_string(lineno);
    auto const fields = split_tabs(line);
    if (fields.size() != 4)
    {
      fail(ErrorKind::data, where + ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    RelationEntry entry;
    entry.name   = std::string(fields[1]);
    entry.source = source_from_string(fields[2]);
    entry.count  = parse_count(fields[3], where);
    if (parse_count(fields[0], where) != vocab.relations_.size())
    {
      fail(ErrorKind::data, where + ": relation ids must be dense and in order");
    }
    vocab.add_relation(std::move(entry));
  }
  return vocab;
}

FrequencyTable count_frequencies(std::span<RawTriple const> triples, std::span<Sentence const> sentences)
{
  FrequencyTable table;
  auto bump = [&](std::string const &surface, bool structured) {
    auto it = table.tokens.find(surface);
    if (it == table.tokens.end())
    {
      it = table.tokens.emplace(surface, TokenCounts{}).first;
    }
    ++(structured ? it->second.structured : it->second.unstructured);
  };
  for (auto const &t : triples)
  {
    bump(t.s, true);
    bump(t.o, true);
    ++table.relations[t.r];
  }
  for (auto const &sentence : sentences)
  {
    for (auto const &w : sentence)
    {
      bump(w, false);
    }
  }
  return table;
}

PruneResult two_round_prune(std::span<RawTriple const> structured, std::span<Sentence const> unstructured,
                            std::uint64_t min_round1, std::uint64_t min_round2,
                            std::set<std::string> const &concepts)
{
  if (min_round1 == 0 || min_round2 == 0)
  {
    fail(ErrorKind::usage, "prune thresholds must be at least 1");
  }
  if (min_round1 < min_round2)
  {
    fail(ErrorKind::usage, "round-1 threshold must not be below the round-2 threshold");
  }

  PruneResult result;
  result.structured.assign(structured.begin(), structured.end());
  result.unstructured.assign(unstructured.begin(), unstructured.end());

  for (auto const threshold : {min_round1, min_round2})
  {
    auto const table = count_frequencies(result.structured, result.unstructured);
    filter_records(result.structured, result.unstructured, [&](std::string const &surface) {
      auto it = table.tokens.find(surface);
      return it != table.tokens.end() && it->second.either() >= threshold;
    });
  }

  auto const final_counts = count_frequencies(result.structured, result.unstructured);
  std::vector<std::pair<std::string, TokenCounts>> ordered(final_counts.tokens.begin(), final_counts.tokens.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](auto const &a, auto const &b) {
    auto const ta = a.second.structured + a.second.unstructured;
    auto const tb = b.second.structured + b.second.unstructured;
    if (ta != tb)
    {
      return ta > tb;
    }
    return a.first < b.first;
  });
  for (auto &[surface, counts] : ordered)
  {
    TokenEntry entry;
    entry.kind = (counts.structured > 0 || concepts.contains(surface)) ? TokenKind::concept_token : TokenKind::word;
    entry.surface            = surface;
    entry.count_structured   = counts.structured;
    entry.count_unstructured = counts.unstructured;
    result.vocabulary.add_token(std::move(entry));
  }
  return result;
}

RelationPruneResult retain_top_relations(std::span<RawTriple const> structured, std::size_t k)
{
  if (k == 0)
  {
    fail(ErrorKind::usage, "top-k relation count must be at least 1");
  }
  std::map<std::string, std::uint64_t, std::less<>> counts;
  for (auto const &t : structured)
  {
    ++counts[t.r];
  }
  std::vector<std::pair<std::string, std::uint64_t>> ordered(counts.begin(), counts.end());
  // `counts` iterates by name, so a stable sort on count keeps lexicographic tie order.
  std::stable_sort(ordered.begin(), ordered.end(), [](auto const &a, auto const &b) { return a.second > b.second; });
  if (ordered.size() > k)
  {
    ordered.resize(k);
  }

  RelationPruneResult result;
  std::unordered_set<std::string> keep;
  for (auto const &[name, count] : ordered)
  {
    result.retained.push_back(name);
    result.retained_counts.push_back(count);
    keep.insert(name);
  }
  for (auto const &t : structured)
  {
    if (keep.contains(t.r))
    {
      result.structured.push_back(t);
    }
  }
  return result;
}

}  // namespace relfuse
