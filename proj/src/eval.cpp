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

#include "relfuse/eval.hpp"

#include "relfuse/sampler.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace relfuse {
namespace {

using Pair = std::pair<std::int32_t, std::int32_t>;

void require_tasks(TestSet const &testset, char const *what)
{
  if (testset.tasks.empty())
  {
    fail(ErrorKind::usage, std::string(what) + " needs a non-empty test set");
  }
}

CompletionTask make_task(Slot slot, Pair pair, std::vector<std::int32_t> correct)
{
  std::sort(correct.begin(), correct.end());
  correct.erase(std::unique(correct.begin(), correct.end()), correct.end());
  return {slot, pair.first, pair.second, std::move(correct)};
}

std::string format_real(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string_view to_string(Provenance p)
{
  return p == Provenance::generic ? "generic" : "transfer";
}

Provenance provenance_from_string(std::string_view text)
{
  if (text == "generic")
  {
    return Provenance::generic;
  }
  if (text == "transfer")
  {
    return Provenance::transfer;
  }
  fail(ErrorKind::data, "unknown provenance '" + std::string(text) + "'");
}

std::pair<std::int32_t, std::int32_t> fixed_pair(Triple const &t, Slot slot)
{
  switch (slot)
  {
  case Slot::S:
    return {t.r, t.o};
  case Slot::R:
    return {t.s, t.o};
  case Slot::O:
    return {t.s, t.r};
  }
  return {};
}

std::int32_t free_value(Triple const &t, Slot slot)
{
  switch (slot)
  {
  case Slot::S:
    return t.s;
  case Slot::R:
    return t.r;
  case Slot::O:
    return t.o;
  }
  return 0;
}

void TestSet::save(std::string const &path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    fail(ErrorKind::data, "cannot write test set '" + path + "'");
  }
  for (auto const &task : tasks)
  {
    nlohmann::ordered_json line;
    line["slot"]       = to_string(task.slot);
    line["fixed"]      = {task.fixed_a, task.fixed_b};
    line["correct"]    = task.correct;
    line["provenance"] = to_string(provenance);
    line["vocab_hash"] = vocab_hash;
    out << line.dump() << '\n';
  }
}

TestSet TestSet::load(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    fail(ErrorKind::data, "cannot open test set '" + path + "'");
  }
  TestSet     testset;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.empty())
    {
      continue;
    }
    auto const where = path + ":" + std::to_string(lineno);
    try
    {
      auto const     j = nlohmann::json::parse(line);
      CompletionTask task;
      task.slot    = slot_from_string(j.at("slot").get<std::string>());
      auto fixed   = j.at("fixed").get<std::vector<std::int32_t>>();
      task.correct = j.at("correct").get<std::vector<std::int32_t>>();
      if (fixed.size() != 2 || task.correct.empty())
      {
        fail(ErrorKind::data, where + ": task needs two fixed ids and at least one correct id");
      }
      task.fixed_a    = fixed[0];
      task.fixed_b    = fixed[1];
      auto const prov = provenance_from_string(j.at("provenance").get<std::string>());
      auto const hash = j.at("vocab_hash").get<std::string>();
      if (testset.tasks.empty())
      {
        testset.slot       = task.slot;
        testset.provenance = prov;
        testset.vocab_hash = hash;
      }
      else if (task.slot != testset.slot || prov != testset.provenance || hash != testset.vocab_hash)
      {
        fail(ErrorKind::data, where + ": slot, provenance and vocabulary hash must agree across tasks");
      }
      testset.tasks.push_back(std::move(task));
    }
    catch (nlohmann::json::exception const &e)
    {
      fail(ErrorKind::data, where + ": " + e.what());
    }
    catch (Error const &e)
    {
      fail(ErrorKind::data, e.what());
    }
  }
  return testset;
}

CarveResult carve_test_set(std::span<Triple const> pool, Slot slot, std::size_t n_pairs, std::uint64_t seed,
                           std::optional<Source> only_source)
{
  CarveResult result;
  result.testset.slot = slot;
  if (n_pairs == 0)
  {
    result.pool.assign(pool.begin(), pool.end());
    return result;
  }

  auto eligible = [&](Triple const &t) { return !only_source || t.source == *only_source; };

  std::map<Pair, std::size_t> pair_index;
  std::vector<Pair>           pairs;
  for (auto const &t : pool)
  {
    if (!eligible(t))
    {
      continue;
    }
    auto const p = fixed_pair(t, slot);
    if (pair_index.emplace(p, pairs.size()).second)
    {
      pairs.push_back(p);
    }
  }
  if (pairs.size() < n_pairs)
  {
    fail(ErrorKind::data, "cannot carve " + std::to_string(n_pairs) + " test pairs: only " +
                              std::to_string(pairs.size()) + " distinct pairs are available");
  }

  Rng rng(seed);
  for (std::size_t i = 0; i < n_pairs; ++i)
  {
    auto const j = i + uniform_index(rng, pairs.size() - i);
    std::swap(pairs[i], pairs[j]);
  }
  pairs.resize(n_pairs);

  std::map<Pair, std::vector<std::int32_t>> answers;
  for (auto const &p : pairs)
  {
    answers[p];
  }
  for (auto const &t : pool)
  {
    if (!eligible(t))
    {
      result.pool.push_back(t);
      continue;
    }
    auto it = answers.find(fixed_pair(t, slot));
    if (it == answers.end())
    {
      result.pool.push_back(t);
    }
    else
    {
      it->second.push_back(free_value(t, slot));
    }
  }
  for (auto const &p : pairs)
  {
    result.testset.tasks.push_back(make_task(slot, p, std::move(answers[p])));
  }
  return result;
}

CarveResult carve_transfer_split(std::span<Triple const> pool, std::set<TokenId> const &delete_tokens, Slot slot)
{
  CarveResult result;
  result.testset.slot       = slot;
  result.testset.provenance = Provenance::transfer;

  std::set<TokenId> in_structured;
  std::set<TokenId> in_cooccurrence;
  for (auto const &t : pool)
  {
    auto &seen = t.source == Source::structured ? in_structured : in_cooccurrence;
    for (auto id : {t.s, t.o})
    {
      if (delete_tokens.contains(id))
      {
        seen.insert(id);
      }
    }
  }
  for (auto id : delete_tokens)
  {
    if (!in_structured.contains(id))
    {
      fail(ErrorKind::data, "transfer token " + std::to_string(id) + " does not appear in structured triples");
    }
    if (!in_cooccurrence.contains(id))
    {
      fail(ErrorKind::data, "transfer token " + std::to_string(id) + " does not appear in co-occurrence triples");
    }
  }

  auto touches = [&](Triple const &t) { return delete_tokens.contains(t.s) || delete_tokens.contains(t.o); };

  std::map<Pair, std::size_t> pair_index;
  std::vector<Pair>           pairs;
  for (auto const &t : pool)
  {
    if (t.source == Source::structured && touches(t))
    {
      auto const p = fixed_pair(t, slot);
      if (pair_index.emplace(p, pairs.size()).second)
      {
        pairs.push_back(p);
      }
    }
  }

  std::vector<std::vector<std::int32_t>> answers(pairs.size());
  for (auto const &t : pool)
  {
    if (t.source == Source::structured)
    {
      if (auto it = pair_index.find(fixed_pair(t, slot)); it != pair_index.end())
      {
        answers[it->second].push_back(free_value(t, slot));
        continue;
      }
    }
    result.pool.push_back(t);
  }
  for (std::size_t i = 0; i < pairs.size(); ++i)
  {
    result.testset.tasks.push_back(make_task(slot, pairs[i], std::move(answers[i])));
  }
  return result;
}

double best_reciprocal_rank(std::span<std::int32_t const> ranking, std::span<std::int32_t const> correct)
{
  for (std::size_t pos = 0; pos < ranking.size(); ++pos)
  {
    if (std::binary_search(correct.begin(), correct.end(), ranking[pos]))
    {
      return 1.0 / static_cast<double>(pos + 1);
    }
  }
  return 0.0;
}

double mrr_best(Embedding const &theta, TestSet const &testset)
{
  require_tasks(testset, "mrr_best");
  double total = 0.0;
  for (auto const &task : testset.tasks)
  {
    total += best_reciprocal_rank(rank_completions(theta, task.query()), task.correct);
  }
  return total / static_cast<double>(testset.tasks.size());
}

double probability_mass(Embedding const &theta, TestSet const &testset)
{
  require_tasks(testset, "probability_mass");
  long double total = 0.0L;
  for (auto const &task : testset.tasks)
  {
    auto const probs = conditional_distribution(theta, task.query());
    for (auto id : task.correct)
    {
      if (id < 0 || static_cast<std::size_t>(id) >= probs.size())
      {
        fail(ErrorKind::data, "correct id " + std::to_string(id) + " is not a valid candidate");
      }
      total += probs[static_cast<std::size_t>(id)];
    }
  }
  return static_cast<double>(total / static_cast<long double>(testset.tasks.size()));
}

double random_baseline(TestSet const &testset, std::size_t candidate_count)
{
  require_tasks(testset, "random_baseline");
  if (candidate_count == 0)
  {
    fail(ErrorKind::usage, "candidate count must be positive");
  }
  std::size_t k = 0;
  for (auto const &task : testset.tasks)
  {
    k += task.correct.size();
  }
  return static_cast<double>(k) / (static_cast<double>(testset.tasks.size()) * static_cast<double>(candidate_count));
}

std::string MetricsReport::to_json() const
{
  nlohmann::ordered_json j;
  j["mrr_best"]              = mrr_best;
  j["mean_probability_mass"] = mean_probability_mass;
  j["baseline_mass"]         = baseline_mass;
  j["n_tasks"]               = n_tasks;
  j["mean_correct_count"]    = mean_correct_count;
  return j.dump(2);
}

MetricsReport MetricsReport::from_json(std::string const &text)
{
  try
  {
    auto const    j = nlohmann::json::parse(text);
    MetricsReport r;
    r.mrr_best              = j.at("mrr_best").get<double>();
    r.mean_probability_mass = j.at("mean_probability_mass").get<double>();
    r.baseline_mass         = j.at("baseline_mass").get<double>();
    r.n_tasks               = j.at("n_tasks").get<std::size_t>();
    r.mean_correct_count    = j.at("mean_correct_count").get<double>();
    return r;
  }
  catch (nlohmann::json::exception const &e)
  {
    fail(ErrorKind::data, std::string("malformed metrics report: ") + e.what());
  }
}

std::string MetricsReport::csv_header()
{
  return "mrr_best,mean_probability_mass,baseline_mass,n_tasks,mean_correct_count";
}

std::string MetricsReport::csv_row() const
{
  return format_real(mrr_best) + "," + format_real(mean_probability_mass) + "," + format_real(baseline_mass) + "," +
         std::to_string(n_tasks) + "," + format_real(mean_correct_count);
}

MetricsReport evaluate(Embedding const &theta, TestSet const &testset)
{
  if (!theta.vocab_hash.empty() && !testset.vocab_hash.empty() && theta.vocab_hash != testset.vocab_hash)
  {
    fail(ErrorKind::data, "vocabulary hash mismatch: model " + theta.vocab_hash + ", test set " + testset.vocab_hash);
  }
  require_tasks(testset, "evaluate");

  MetricsReport report;
  auto const    candidates  = candidate_count(theta, testset.slot);
  report.mrr_best              = mrr_best(theta, testset);
  report.mean_probability_mass = probability_mass(theta, testset);
  report.baseline_mass         = random_baseline(testset, candidates);
  report.n_tasks               = testset.tasks.size();
  report.mean_correct_count    = random_baseline(testset, 1);
  return report;
}

}  // namespace relfuse
