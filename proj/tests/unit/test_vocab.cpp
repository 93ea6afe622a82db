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
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

using namespace relfuse;
using testing::capture_error;

namespace {

Sentence words(std::string const &text)
{
  Sentence           out;
  std::istringstream in(text);
  std::string        w;
  while (in >> w)
  {
    out.push_back(w);
  }
  return out;
}

std::vector<Sentence> corpus(std::vector<std::string> const &lines)
{
  std::vector<Sentence> out;
  for (auto const &l : lines)
  {
    out.push_back(words(l));
  }
  return out;
}

// Straightforward single-round filter used as a reference.
std::map<std::string, std::uint64_t> counts_of(std::vector<Sentence> const &sentences)
{
  std::map<std::string, std::uint64_t> c;
  for (auto const &s : sentences)
  {
    for (auto const &w : s)
    {
      ++c[w];
    }
  }
  return c;
}

std::vector<Sentence> reference_round(std::vector<Sentence> const &sentences, std::uint64_t min)
{
  auto const            c = counts_of(sentences);
  std::vector<Sentence> out;
  for (auto const &s : sentences)
  {
    if (std::all_of(s.begin(), s.end(), [&](auto const &w) { return c.at(w) >= min; }))
    {
      out.push_back(s);
    }
  }
  return out;
}

std::vector<Sentence> random_corpus(std::mt19937_64 &rng, int n_sentences, int alphabet)
{
  std::vector<Sentence>              out;
  std::uniform_int_distribution<int> len(1, 4);
  std::geometric_distribution<int>   pick(0.25);
  for (int i = 0; i < n_sentences; ++i)
  {
    Sentence s;
    for (int k = len(rng); k > 0; --k)
    {
      s.push_back("w" + std::to_string(std::min(pick(rng), alphabet - 1)));
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("count_frequencies counts per source")
{
  auto const sentences = corpus({"a b", "a c"});
  auto const table     = count_frequencies({}, sentences);
  CHECK(table.tokens.at("a").unstructured == 2);
  CHECK(table.tokens.at("b").unstructured == 1);
  CHECK(table.tokens.at("c").unstructured == 1);
  CHECK(table.tokens.at("a").structured == 0);

  CHECK(count_frequencies({}, {}).tokens.empty());

  std::vector<RawTriple> triples(3, RawTriple{"x", "r", "y"});
  auto const             t = count_frequencies(triples, {});
  CHECK(t.tokens.at("x").structured == 3);
  CHECK(t.tokens.at("y").structured == 3);
  CHECK(t.relations.at("r") == 3);
}

TEST_CASE("round 1 removes every record holding a token under the threshold")
{
  std::vector<Sentence> sentences;
  for (int i = 0; i < 99; ++i)
  {
    sentences.push_back({"q", "common"});
  }
  for (int i = 0; i < 150; ++i)
  {
    sentences.push_back({"common"});
  }
  auto const out = two_round_prune({}, sentences, 100, 50);
  CHECK(out.unstructured.size() == 150);
  CHECK_FALSE(out.vocabulary.token_id("q").has_value());
  CHECK(out.vocabulary.token_id("common").has_value());
}

TEST_CASE("prune leaves a corpus of frequent tokens untouched")
{
  std::vector<Sentence>  sentences(120, Sentence{"a", "b"});
  std::vector<RawTriple> triples(100, RawTriple{"x", "r", "y"});
  auto const             out = two_round_prune(triples, sentences, 100, 50);
  CHECK(out.unstructured == sentences);
  CHECK(out.structured == triples);
}

TEST_CASE("round 2 removes a token that only survived round 1 on records later dropped")
{
  // p appears 6 times; 4 of its sentences carry the rare x or y, so round 1
  // drops them and p falls to 2 < 3 in round 2.
  auto const sentences = corpus({"p x", "p x", "p y", "p y", "p a", "p a", "a b", "a b", "b b", "b a"});
  auto const out       = two_round_prune({}, sentences, 4, 3);
  CHECK(out.unstructured == corpus({"a b", "a b", "b b", "b a"}));
  REQUIRE(out.vocabulary.token_count() == 2);
  CHECK(out.vocabulary.token(0).surface == "b");
  CHECK(out.vocabulary.token(0).count_unstructured == 5);
  CHECK(out.vocabulary.token(1).surface == "a");
  CHECK(out.vocabulary.token(1).count_unstructured == 3);
}

TEST_CASE("either-source rule keeps a token frequent in one source only")
{
  std::vector<RawTriple> triples(5, RawTriple{"x", "r", "y"});
  std::vector<Sentence>  sentences{{"x", "z"}};
  auto const             out = two_round_prune(triples, sentences, 2, 2);
  CHECK(out.structured.size() == 5);
  CHECK(out.unstructured.empty());  // z occurs once
  REQUIRE(out.vocabulary.token_id("x").has_value());
  CHECK(out.vocabulary.token(*out.vocabulary.token_id("x")).kind == TokenKind::concept_token);
}

TEST_CASE("prune thresholds are validated")
{
  CHECK(capture_error([] { two_round_prune({}, {}, 0, 0); }).first == ErrorKind::usage);
  CHECK(capture_error([] { two_round_prune({}, {}, 5, 0); }).first == ErrorKind::usage);
  CHECK(capture_error([] { two_round_prune({}, {}, 5, 6); }).first == ErrorKind::usage);
}

TEST_CASE("surviving tokens clear the round-2 threshold on the round-1 output")
{
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial)
  {
    auto const sentences = random_corpus(rng, 200, 30);
    auto const round1    = reference_round(sentences, 8);
    auto const c1        = counts_of(round1);
    auto const out       = two_round_prune({}, sentences, 8, 4);
    for (auto const &s : out.unstructured)
    {
      for (auto const &w : s)
      {
        CHECK(c1.at(w) >= 4);
      }
    }
    CHECK(out.unstructured == reference_round(round1, 4));
  }
}

TEST_CASE("pruning again is a no-op when survivors clear the round-1 threshold")
{
  std::mt19937_64 rng(11);
  int             qualifying = 0;
  for (int trial = 0; trial < 100; ++trial)
  {
    auto const sentences = random_corpus(rng, 200, 30);
    auto const once      = two_round_prune({}, sentences, 6, 3);
    auto const c         = counts_of(once.unstructured);
    if (!std::all_of(c.begin(), c.end(), [](auto const &kv) { return kv.second >= 6; }))
    {
      continue;
    }
    ++qualifying;
    auto const twice = two_round_prune({}, once.unstructured, 6, 3);
    CHECK(twice.unstructured == once.unstructured);
    CHECK(twice.vocabulary.hash() == once.vocabulary.hash());
  }
  CHECK(qualifying > 10);
}

TEST_CASE("a token left between the two thresholds is removed by a second pass")
{
  // a: 60 solo sentences plus 40 next to q (99 occurrences). Round 1 drops q's
  // records, a keeps 60 >= 50 in round 2, but 60 < 100 on a second pass.
  std::vector<Sentence> sentences(60, Sentence{"a"});
  for (int i = 0; i < 40; ++i)
  {
    sentences.push_back({"a", "q"});
  }
  for (int i = 0; i < 59; ++i)
  {
    sentences.push_back({"q"});
  }
  auto const once  = two_round_prune({}, sentences, 100, 50);
  CHECK(once.unstructured.size() == 60);
  auto const twice = two_round_prune({}, once.unstructured, 100, 50);
  CHECK(twice.unstructured.empty());
}

TEST_CASE("retain_top_relations keeps the k most frequent")
{
  std::vector<RawTriple> triples;
  auto add = [&](std::string const &r, int n) {
    for (int i = 0; i < n; ++i)
    {
      triples.push_back({"s", r, "o"});
    }
  };
  add("r1", 10);
  add("r2", 5);
  add("r3", 1);
  auto const out = retain_top_relations(triples, 2);
  CHECK(out.retained == std::vector<std::string>{"r1", "r2"});
  CHECK(out.structured.size() == 15);
  CHECK(retain_top_relations(triples, 20).structured.size() == 16);
  CHECK(capture_error([&] { retain_top_relations(triples, 0); }).first == ErrorKind::usage);
}

TEST_CASE("relation ties at the boundary go to the smaller names")
{
  std::vector<RawTriple> triples;
  for (auto const *r : {"r3", "r1", "r2"})
  {
    for (int i = 0; i < 5; ++i)
    {
      triples.push_back({"s", r, "o"});
    }
  }
  // Enumerate every 2-subset; the rule picks maximal total count, then the
  // lexicographically smallest sorted name list.
  std::vector<std::string>              names{"r1", "r2", "r3"};
  std::vector<std::vector<std::string>> subsets;
  for (std::size_t i = 0; i < 3; ++i)
  {
    for (std::size_t j = i + 1; j < 3; ++j)
    {
      subsets.push_back({names[i], names[j]});
    }
  }
  auto const expected = *std::min_element(subsets.begin(), subsets.end());
  auto       got      = retain_top_relations(triples, 2).retained;
  std::sort(got.begin(), got.end());
  CHECK(got == expected);
}

TEST_CASE("vocabulary ids are a bijection and survive a save/load round trip")
{
  testing::TempDir dir;
  Vocabulary       vocab;
  vocab.add_token({0, "alpha", TokenKind::word, 0, 3});
  vocab.add_token({1, "C0023473", TokenKind::concept_token, 7, 1});
  vocab.add_relation({0, "TREATS", Source::structured, 7});
  vocab.add_relation({1, std::string(kCoOccurrenceRelation), Source::co_occurrence, 4});
  for (TokenId id = 0; id < 2; ++id)
  {
    CHECK(vocab.token_id(vocab.token(id).surface) == id);
  }
  vocab.save(dir.file("t.tsv"), dir.file("r.tsv"));
  auto const back = Vocabulary::load(dir.file("t.tsv"), dir.file("r.tsv"));
  CHECK(back.hash() == vocab.hash());
  CHECK(back.token(1).kind == TokenKind::concept_token);
  CHECK(back.co_occurrence_relation() == 1);

  CHECK(capture_error([&] { vocab.add_token({2, "alpha", TokenKind::word, 0, 0}); }).first == ErrorKind::data);
  CHECK(vocab.token_id("missing") == std::nullopt);
}

TEST_CASE("hash tracks the id assignment and ignores counts")
{
  auto make = [](std::vector<std::string> const &surfaces, std::uint64_t count) {
    Vocabulary v;
    for (auto const &s : surfaces)
    {
      v.add_token({0, s, TokenKind::word, count, 0});
    }
    v.add_relation({0, "R", Source::structured, count});
    return v;
  };
  auto const a = make({"x", "y"}, 1);
  CHECK(a.hash().size() == 16);
  CHECK(a.hash() == make({"x", "y"}, 9).hash());
  CHECK(a.hash() != make({"y", "x"}, 1).hash());
  CHECK(a.hash() != make({"x", "z"}, 1).hash());
}

TEST_CASE("suggest ranks by shared prefix")
{
  Vocabulary vocab;
  for (auto const *s : {"carcinoma", "cardiac", "radium", "carbon"})
  {
    vocab.add_token({0, s, TokenKind::word, 1, 0});
  }
  auto const got = vocab.suggest("carcin", 2);
  REQUIRE(got.size() == 2);
  CHECK(got[0] == "carcinoma");
  CHECK(vocab.suggest("zzz").empty());
}
