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

#include "relfuse/workflow.hpp"
#include "support.hpp"

#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <set>

using namespace relfuse;
using testing::capture_error;
using testing::read_file;
using testing::write_file;

namespace {

std::string const kText = "Patient has chronic myelogenous leukemia.\n"
                          "Chronic myelogenous leukemia treated with imatinib 400 mg.\n"
                          "No known drug allergies.\n"
                          "Imatinib was started.\n"
                          "...\n"
                          "no known drug allergies\n";

std::string const kStructured = "C0023473\tTREATED_BY\timatinib\n"
                                "C0023473\tISA\tC0006826\n"
                                "imatinib\tTREATS\tC0023473\n";

std::string const kLexicon = "chronic myelogenous leukemia\tC0023473\n";

IngestOptions fixture_options(testing::TempDir const &dir, std::string const &out)
{
  write_file(dir.file("text.txt"), kText);
  write_file(dir.file("kb.tsv"), kStructured);
  write_file(dir.file("lexicon.tsv"), kLexicon);
  IngestOptions opts;
  opts.text_path       = dir.file("text.txt");
  opts.structured_path = dir.file("kb.tsv");
  opts.lexicon_path    = dir.file("lexicon.tsv");
  opts.min_round1      = 1;
  opts.min_round2      = 1;
  opts.out_dir         = dir.file(out);
  return opts;
}

// 100 structured triples over 20 tokens and 3 relations.
void write_fixture_dataset(std::string const &dir)
{
  Dataset data;
  for (int i = 0; i < 20; ++i)
  {
    data.vocab.add_token({0, "t" + std::to_string(i), TokenKind::concept_token, 1, 0});
  }
  for (int r = 0; r < 3; ++r)
  {
    data.vocab.add_relation({0, "R" + std::to_string(r), Source::structured, 1});
  }
  data.vocab.add_relation({0, std::string(kCoOccurrenceRelation), Source::co_occurrence, 1});
  Rng rng(4);
  for (int i = 0; i < 100; ++i)
  {
    data.pool.push_back({static_cast<int>(uniform_index(rng, 20)), static_cast<int>(uniform_index(rng, 3)),
                         static_cast<int>(uniform_index(rng, 20)), Source::structured});
  }
  for (int t : {3, 7})
  {
    data.pool.push_back({t, 0, 11, Source::structured});
    data.pool.push_back({t, 3, 12, Source::co_occurrence});
  }
  save_dataset(dir, data);
}

std::set<std::string> surfaces_in(std::vector<RawTriple> const &triples)
{
  std::set<std::string> out;
  for (auto const &t : triples)
  {
    out.insert(t.s);
    out.insert(t.o);
  }
  return out;
}

}  // namespace

TEST_CASE("ingest produces a dataset, stats and manifest")
{
  testing::TempDir dir;
  auto const       opts  = fixture_options(dir, "out");
  auto const       stats = run_ingest(opts);
  CHECK(stats.raw_sentences == 6);
  CHECK(stats.sentences == 5);
  CHECK(stats.unique_sentences == 4);
  CHECK(stats.raw_statements == 3);
  for (auto const *f : {"tokens.tsv", "relations.tsv", "pool.tsv", "manifest.json", "stats.json"})
  {
    CHECK(std::filesystem::exists(dir.file(std::string("out/") + f)));
  }

  auto const data = load_dataset(opts.out_dir);
  CHECK(data.vocab.token_id("C0023473").has_value());
  CHECK(data.vocab.token_id("NUMBER").has_value());
  CHECK_FALSE(data.vocab.token_id("chronic").has_value());
  CHECK(data.vocab.co_occurrence_relation().has_value());
  auto const co = std::count_if(data.pool.begin(), data.pool.end(),
                                [](Triple const &t) { return t.source == Source::co_occurrence; });
  CHECK(static_cast<std::size_t>(co) == stats.cooccurrence_triples);
  CHECK(data.pool.size() == stats.structured_triples + stats.cooccurrence_triples);

  auto const manifest = nlohmann::json::parse(read_file(dir.file("out/manifest.json")));
  CHECK(manifest["command"] == "ingest");
  CHECK(manifest["vocab_hash"] == data.vocab.hash());
  CHECK(manifest["inputs"].size() == 3);
}

TEST_CASE("ingest overlap count matches the token set intersection")
{
  testing::TempDir dir;
  auto const       opts = fixture_options(dir, "out");
  auto const       got  = ingest(opts);

  // Brute force over the raw inputs after the same preprocessing.
  Lexicon lexicon = Lexicon::load(*opts.lexicon_path);
  std::set<std::string> text_tokens;
  std::istringstream    in(kText);
  std::string           line;
  while (std::getline(in, line))
  {
    if (auto s = preprocess_text(line))
    {
      for (auto const &w : greedy_concept_match(*s, lexicon))
      {
        text_tokens.insert(w);
      }
    }
  }
  auto const kb_tokens = surfaces_in(read_raw_triples(*opts.structured_path));
  std::vector<std::string> both;
  std::set_intersection(text_tokens.begin(), text_tokens.end(), kb_tokens.begin(), kb_tokens.end(),
                        std::back_inserter(both));
  CHECK(both == std::vector<std::string>{"C0023473", "imatinib"});
  CHECK(got.stats.overlap_tokens == both.size());
}

TEST_CASE("ingest is byte-for-byte reproducible")
{
  testing::TempDir dir;
  auto             a = fixture_options(dir, "a");
  auto             b = fixture_options(dir, "b");
  run_ingest(a);
  run_ingest(b);
  for (auto const *f : {"tokens.tsv", "relations.tsv", "pool.tsv", "stats.json"})
  {
    CHECK(read_file(dir.file(std::string("a/") + f)) == read_file(dir.file(std::string("b/") + f)));
  }
}

TEST_CASE("structured-only ingest has no co-occurrence triples")
{
  testing::TempDir dir;
  auto             opts = fixture_options(dir, "out");
  opts.text_path.reset();
  auto const got = ingest(opts);
  CHECK(got.stats.cooccurrence_triples == 0);
  CHECK(got.data.pool.size() == 3);
  CHECK(std::all_of(got.data.pool.begin(), got.data.pool.end(),
                    [](Triple const &t) { return t.source == Source::structured; }));

  IngestOptions none;
  none.out_dir = dir.file("none");
  CHECK(capture_error([&] { ingest(none); }).first == ErrorKind::usage);
}

TEST_CASE("ingest reports malformed structured lines")
{
  testing::TempDir dir;
  auto             opts = fixture_options(dir, "out");
  write_file(*opts.structured_path, "a\tR\tb\nbroken line\n");
  auto const [kind, msg] = capture_error([&] { ingest(opts); });
  CHECK(kind == ErrorKind::data);
  CHECK(testing::contains(msg, ":2"));
}

TEST_CASE("carve writes a disjoint test set and is reproducible")
{
  testing::TempDir dir;
  write_fixture_dataset(dir.file("data"));
  CarveOptions opts;
  opts.data_dir = dir.file("data");
  opts.out_dir  = dir.file("carved");
  opts.n_pairs  = 10;
  opts.seed     = 5;
  auto const ts = run_carve(opts);
  CHECK(ts.tasks.size() == 10);
  auto const reduced = load_dataset(opts.out_dir);
  std::set<std::pair<int, int>> pairs;
  for (auto const &task : ts.tasks)
  {
    pairs.insert({task.fixed_a, task.fixed_b});
  }
  for (auto const &t : reduced.pool)
  {
    CHECK(pairs.count(fixed_pair(t, Slot::R)) == 0);
  }
  CHECK(ts.vocab_hash == reduced.vocab.hash());

  opts.out_dir = dir.file("carved2");
  run_carve(opts);
  CHECK(read_file(dir.file("carved/testset.jsonl")) == read_file(dir.file("carved2/testset.jsonl")));
  CHECK(read_file(dir.file("carved/pool.tsv")) == read_file(dir.file("carved2/pool.tsv")));
}

TEST_CASE("transfer carve removes the delete tokens from structured training data")
{
  testing::TempDir dir;
  write_fixture_dataset(dir.file("data"));
  CarveOptions opts;
  opts.data_dir        = dir.file("data");
  opts.out_dir         = dir.file("transfer");
  opts.transfer_tokens = {"t3", "t7"};
  auto const ts        = run_carve(opts);
  CHECK(ts.provenance == Provenance::transfer);
  CHECK_FALSE(ts.tasks.empty());
  auto const reduced = load_dataset(opts.out_dir);
  for (auto const &t : reduced.pool)
  {
    if (t.source == Source::structured)
    {
      CHECK(t.s != 3);
      CHECK(t.s != 7);
      CHECK(t.o != 3);
      CHECK(t.o != 7);
    }
  }
  opts.transfer_tokens = {"nope"};
  CHECK(capture_error([&] { run_carve(opts); }).first == ErrorKind::data);
}

TEST_CASE("train with zero epochs writes the initialization")
{
  testing::TempDir dir;
  write_fixture_dataset(dir.file("data"));
  write_file(dir.file("cfg.txt"), "dim = 4\nbatch_size = 10\nmax_epochs = 0\nseed = 17\n");
  auto const report = run_train(dir.file("data"), dir.file("cfg.txt"), dir.file("run"));
  CHECK(report.epochs.empty());
  auto const data  = load_dataset(dir.file("data"));
  auto       init  = initialize_embedding(20, 4, 4, EnergyNormalizer::object_norm, 17);
  init.vocab_hash  = data.vocab.hash();
  save_model(init, dir.file("init.bin"));
  CHECK(read_file(dir.file("run/model.bin")) == read_file(dir.file("init.bin")));
}

TEST_CASE("train logs one CSV row per epoch")
{
  testing::TempDir dir;
  write_fixture_dataset(dir.file("data"));
  write_file(dir.file("cfg.txt"), "dim = 3\nbatch_size = 10\nmax_epochs = 3\npatience = 10\nseed = 2\n");
  auto const report = run_train(dir.file("data"), dir.file("cfg.txt"), dir.file("run"));
  auto const csv    = read_file(dir.file("run/metrics.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(report.epochs.size()) + 1);
  CHECK(csv.rfind("epoch,validation_metric,wall_seconds\n", 0) == 0);
  auto const json = nlohmann::json::parse(read_file(dir.file("run/report.json")));
  CHECK(json["epochs_run"] == report.epochs.size());

  write_file(dir.file("bad.txt"), "batch_size = 0\n");
  auto const [kind, msg] = capture_error([&] { run_train(dir.file("data"), dir.file("bad.txt"), dir.file("bad")); });
  CHECK(kind == ErrorKind::usage);
  CHECK(testing::contains(msg, "batch_size"));
}

TEST_CASE("downstream commands refuse mismatched vocabularies")
{
  testing::TempDir dir;
  write_fixture_dataset(dir.file("data"));
  CarveOptions opts;
  opts.data_dir = dir.file("data");
  opts.out_dir  = dir.file("carved");
  opts.n_pairs  = 5;
  run_carve(opts);
  write_file(dir.file("cfg.txt"), "dim = 3\nbatch_size = 10\nmax_epochs = 1\n");
  run_train(dir.file("carved"), dir.file("cfg.txt"), dir.file("run"));

  auto const ok = run_evaluate(dir.file("run/model.bin"), dir.file("carved/testset.jsonl"), dir.file("eval/m.json"));
  CHECK(ok.n_tasks == 5);
  CHECK(std::filesystem::exists(dir.file("eval/m.csv")));
  CHECK(MetricsReport::from_json(read_file(dir.file("eval/m.json"))) == ok);

  auto model       = load_model(dir.file("run/model.bin"));
  model.vocab_hash = "ffffffffffffffff";
  save_model(model, dir.file("other.bin"));
  CHECK(capture_error([&] { run_evaluate(dir.file("other.bin"), dir.file("carved/testset.jsonl"), dir.file("x.json")); })
            .first == ErrorKind::data);

  // Editing the vocabulary behind the manifest's back is caught on load.
  auto tokens = read_file(dir.file("carved/tokens.tsv"));
  tokens.replace(tokens.find("t1\t"), 3, "tX\t");
  write_file(dir.file("carved/tokens.tsv"), tokens);
  auto const [kind, msg] = capture_error([&] { load_dataset(dir.file("carved")); });
  INFO(msg);
  CHECK(kind == ErrorKind::data);
  CHECK(testing::contains(msg, "mismatch"));
}

TEST_CASE("synth writes a dataset and the planted truth")
{
  testing::TempDir dir;
  SynthOptions     opts;
  opts.n_tokens    = 6;
  opts.n_relations = 2;
  opts.dim         = 3;
  opts.n_triples   = 500;
  opts.seed        = 8;
  opts.out_dir     = dir.file("a");
  run_synth(opts);
  opts.out_dir = dir.file("b");
  run_synth(opts);
  CHECK(read_file(dir.file("a/pool.tsv")) == read_file(dir.file("b/pool.tsv")));
  CHECK(read_file(dir.file("a/truth.bin")) == read_file(dir.file("b/truth.bin")));
  auto const data  = load_dataset(dir.file("a"));
  auto const truth = load_model(dir.file("a/truth.bin"));
  CHECK(data.pool.size() == 500);
  CHECK(truth.vocab_hash == data.vocab.hash());

  opts.n_tokens = 2;
  CHECK(capture_error([&] { run_synth(opts); }).first == ErrorKind::usage);
}
