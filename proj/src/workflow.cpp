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

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

namespace relfuse {
namespace fs = std::filesystem;
namespace {

std::string path_in(std::string const &dir, char const *name)
{
  return (fs::path(dir) / name).string();
}

void ensure_dir(std::string const &dir)
{
  if (dir.empty())
  {
    fail(ErrorKind::usage, "output directory must be given");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
  {
    fail(ErrorKind::data, "cannot create directory '" + dir + "': " + ec.message());
  }
}

std::string utc_timestamp()
{
  auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm    tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(std::string const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    fail(ErrorKind::data, "cannot write '" + path + "'");
  }
  out << text;
}

struct Manifest
{
  std::string            command;
  std::uint64_t          seed{0};
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  std::string            vocab_hash;

  void add_input(std::string const &path)
  {
    inputs[path] = hash_file(path);
  }

  void write(std::string const &dir) const
  {
    nlohmann::ordered_json j;
    j["command"]      = command;
    j["tool_version"] = kToolVersion;
    j["seed"]         = seed;
    j["config"]       = config;
    j["inputs"]       = inputs;
    j["vocab_hash"]   = vocab_hash;
    j["created_utc"]  = utc_timestamp();
    write_text(path_in(dir, kManifestFile), j.dump(2) + "\n");
  }
};

// Downstream commands check recorded dataset hashes when a manifest exists.
void verify_manifest(std::string const &dir, Vocabulary const &vocab)
{
  auto const path = path_in(dir, kManifestFile);
  if (!fs::exists(path))
  {
    return;
  }
  std::ifstream  in(path);
  nlohmann::json j;
  try
  {
    j = nlohmann::json::parse(in);
  }
  catch (nlohmann::json::exception const &e)
  {
    fail(ErrorKind::data, "malformed manifest '" + path + "': " + e.what());
  }
  auto const recorded = j.value("vocab_hash", std::string{});
  if (!recorded.empty() && recorded != vocab.hash())
  {
    fail(ErrorKind::data, "vocabulary hash mismatch in '" + dir + "': manifest records " + recorded +
                              ", vocabulary files hash to " + vocab.hash());
  }
}

}  // namespace

Dataset load_dataset(std::string const &dir)
{
  Dataset data;
  data.vocab = Vocabulary::load(path_in(dir, kTokensFile), path_in(dir, kRelationsFile));
  verify_manifest(dir, data.vocab);
  data.pool = load_structured(path_in(dir, kPoolFile), data.vocab, UnknownPolicy::fail);
  return data;
}

void save_dataset(std::string const &dir, Dataset const &data)
{
  ensure_dir(dir);
  data.vocab.save(path_in(dir, kTokensFile), path_in(dir, kRelationsFile));
  save_triples(path_in(dir, kPoolFile), data.pool, data.vocab);
}

std::string IngestStats::to_json() const
{
  nlohmann::ordered_json j;
  j["raw_sentences"]        = raw_sentences;
  j["sentences"]            = sentences;
  j["unique_sentences"]     = unique_sentences;
  j["raw_statements"]       = raw_statements;
  j["kept_sentences"]       = kept_sentences;
  j["kept_statements"]      = kept_statements;
  j["tokens"]               = tokens;
  j["relations"]            = relations;
  j["overlap_tokens"]       = overlap_tokens;
  j["structured_triples"]   = structured_triples;
  j["cooccurrence_triples"] = cooccurrence_triples;
  return j.dump(2) + "\n";
}

IngestResult ingest(IngestOptions const &opts)
{
  if (!opts.text_path && !opts.structured_path)
  {
    fail(ErrorKind::usage, "ingest needs a text corpus, a structured triple file, or both");
  }
  if (opts.window < 1)
  {
    fail(ErrorKind::usage, "co-occurrence window must be at least 1");
  }

  IngestResult result;
  auto        &stats = result.stats;

  Lexicon lexicon;
  if (opts.lexicon_path)
  {
    lexicon = Lexicon::load(*opts.lexicon_path);
  }
  std::optional<NumberClasses> classes;
  if (opts.number_classes_path)
  {
    classes = NumberClasses::load(*opts.number_classes_path);
  }

  std::vector<Sentence> sentences;
  if (opts.text_path)
  {
    std::ifstream in(*opts.text_path);
    if (!in)
    {
      fail(ErrorKind::data, "cannot open '" + *opts.text_path + "'");
    }
    std::unordered_set<std::string> unique;
    std::string                     line;
    while (std::getline(in, line))
    {
      ++stats.raw_sentences;
      auto sentence = preprocess_text(line, classes ? &*classes : nullptr);
      if (!sentence)
      {
        continue;
      }
      auto matched = greedy_concept_match(*sentence, lexicon);
      std::string key;
      for (auto const &w : matched)
      {
        key += w;
        key += ' ';
      }
      unique.insert(std::move(key));
      sentences.push_back(std::move(matched));
    }
    stats.sentences        = sentences.size();
    stats.unique_sentences = unique.size();
  }

  std::vector<RawTriple> statements;
  if (opts.structured_path)
  {
    statements           = read_raw_triples(*opts.structured_path);
    stats.raw_statements = statements.size();
  }

  auto const concept_list = lexicon.concepts();
  auto       pruned = two_round_prune(statements, sentences, opts.min_round1, opts.min_round2,
                                      std::set<std::string>(concept_list.begin(), concept_list.end()));
  auto       top    = retain_top_relations(pruned.structured, opts.top_k_relations);
  stats.kept_sentences  = pruned.unstructured.size();
  stats.kept_statements = top.structured.size();

  // Relation pruning can orphan tokens, so the final catalog is rebuilt from
  // the surviving records, keeping the pruned vocabulary's order.
  auto const  counts = count_frequencies(top.structured, pruned.unstructured);
  Vocabulary &vocab  = result.data.vocab;
  for (auto const &entry : pruned.vocabulary.tokens())
  {
    auto it = counts.tokens.find(entry.surface);
    if (it == counts.tokens.end())
    {
      continue;
    }
    TokenEntry copy         = entry;
    copy.count_structured   = it->second.structured;
    copy.count_unstructured = it->second.unstructured;
    if (copy.count_structured > 0 && copy.count_unstructured > 0)
    {
      ++stats.overlap_tokens;
    }
    vocab.add_token(std::move(copy));
  }
  for (std::size_t i = 0; i < top.retained.size(); ++i)
  {
    vocab.add_relation({0, top.retained[i], Source::structured, top.retained_counts[i]});
  }

  auto &pool = result.data.pool;
  for (auto const &t : top.structured)
  {
    pool.push_back({*vocab.token_id(t.s), *vocab.relation_id(t.r), *vocab.token_id(t.o), Source::structured});
  }
  stats.structured_triples = pool.size();

  if (!pruned.unstructured.empty())
  {
    std::vector<Triple> cooc;
    auto const          relation = static_cast<RelationId>(vocab.relation_count());
    std::vector<TokenId> ids;
    for (auto const &sentence : pruned.unstructured)
    {
      ids.clear();
      for (auto const &w : sentence)
      {
        ids.push_back(*vocab.token_id(w));
      }
      auto const emitted = window_cooccurrence(ids, relation, opts.window);
      cooc.insert(cooc.end(), emitted.begin(), emitted.end());
    }
    vocab.add_relation({0, std::string(kCoOccurrenceRelation), Source::co_occurrence, cooc.size()});
    stats.cooccurrence_triples = cooc.size();
    pool.insert(pool.end(), cooc.begin(), cooc.end());
  }

  stats.tokens    = vocab.token_count();
  stats.relations = vocab.relation_count();
  return result;
}

IngestStats run_ingest(IngestOptions const &opts)
{
  ensure_dir(opts.out_dir);
  auto result = ingest(opts);

  Manifest manifest;
  manifest.command = "ingest";
  manifest.seed    = opts.seed;
  for (auto const *path : {&opts.text_path, &opts.structured_path, &opts.lexicon_path, &opts.number_classes_path})
  {
    if (*path)
    {
      manifest.add_input(**path);
    }
  }
  manifest.config["min_round1"]      = opts.min_round1;
  manifest.config["min_round2"]      = opts.min_round2;
  manifest.config["top_k_relations"] = opts.top_k_relations;
  manifest.config["window"]          = opts.window;
  manifest.vocab_hash                = result.data.vocab.hash();
  manifest.write(opts.out_dir);

  save_dataset(opts.out_dir, result.data);
  write_text(path_in(opts.out_dir, "stats.json"), result.stats.to_json());
  return result.stats;
}

TestSet run_carve(CarveOptions const &opts)
{
  auto const data = load_dataset(opts.data_dir);
  ensure_dir(opts.out_dir);

  CarveResult carved;
  if (!opts.transfer_tokens.empty())
  {
    std::set<TokenId> ids;
    for (auto const &surface : opts.transfer_tokens)
    {
      auto id = data.vocab.token_id(surface);
      if (!id)
      {
        fail(ErrorKind::data, "transfer token '" + surface + "' is not in the vocabulary");
      }
      ids.insert(*id);
    }
    carved = carve_transfer_split(data.pool, ids, opts.slot);
  }
  else
  {
    carved = carve_test_set(data.pool, opts.slot, opts.n_pairs, opts.seed,
                            opts.structured_only ? std::optional<Source>(Source::structured) : std::nullopt);
  }
  carved.testset.vocab_hash = data.vocab.hash();

  Manifest manifest;
  manifest.command = "carve";
  manifest.seed    = opts.seed;
  manifest.add_input(path_in(opts.data_dir, kTokensFile));
  manifest.add_input(path_in(opts.data_dir, kRelationsFile));
  manifest.add_input(path_in(opts.data_dir, kPoolFile));
  manifest.config["slot"]            = to_string(opts.slot);
  manifest.config["n_pairs"]         = opts.n_pairs;
  manifest.config["transfer_tokens"] = opts.transfer_tokens;
  manifest.config["structured_only"] = opts.structured_only;
  manifest.vocab_hash                = carved.testset.vocab_hash;
  manifest.write(opts.out_dir);

  save_dataset(opts.out_dir, {data.vocab, carved.pool});
  carved.testset.save(path_in(opts.out_dir, "testset.jsonl"));
  return carved.testset;
}

TrainReport run_train(std::string const &data_dir, std::string const &config_path, std::string const &out_dir)
{
  auto const cfg  = TrainConfig::load(config_path);
  auto const data = load_dataset(data_dir);
  ensure_dir(out_dir);

  Manifest manifest;
  manifest.command = "train";
  manifest.seed    = cfg.seed;
  manifest.add_input(config_path);
  manifest.add_input(path_in(data_dir, kTokensFile));
  manifest.add_input(path_in(data_dir, kRelationsFile));
  manifest.add_input(path_in(data_dir, kPoolFile));
  manifest.config     = cfg.to_text();
  manifest.vocab_hash = data.vocab.hash();
  manifest.write(out_dir);

  auto const    csv_path = path_in(out_dir, "metrics.csv");
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv)
  {
    fail(ErrorKind::data, "cannot write '" + csv_path + "'");
  }
  csv << "epoch,validation_metric,wall_seconds\n";
  auto result = fit(data.pool, data.vocab.token_count(), data.vocab.relation_count(), cfg,
                    [&](EpochRecord const &rec) {
                      char buf[96];
                      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.3f\n", rec.epoch, rec.validation_metric,
                                    rec.wall_seconds);
                      csv << buf << std::flush;
                    });

  result.theta.vocab_hash = data.vocab.hash();
  auto const model_path   = path_in(out_dir, "model.bin");
  save_model(result.theta, model_path);
  result.report.model_path = model_path;

  nlohmann::ordered_json report;
  report["epochs_run"]     = result.report.epochs.size();
  report["stopping_epoch"] = result.report.stopping_epoch;
  report["best_epoch"]     = result.report.best_epoch;
  report["best_metric"]    = result.report.best_metric;
  report["model_path"]     = model_path;
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (auto const &rec : result.report.epochs)
  {
    series.push_back(rec.validation_metric);
  }
  report["validation_metric"] = series;
  write_text(path_in(out_dir, "report.json"), report.dump(2) + "\n");
  return result.report;
}

MetricsReport run_evaluate(std::string const &model_path, std::string const &testset_path, std::string const &out_path)
{
  auto const theta   = load_model(model_path);
  auto const testset = TestSet::load(testset_path);
  if (testset.tasks.empty())
  {
    fail(ErrorKind::data, "test set '" + testset_path + "' has no tasks");
  }
  auto const report = evaluate(theta, testset);

  auto const parent = fs::path(out_path).parent_path();
  if (!parent.empty())
  {
    ensure_dir(parent.string());
  }
  write_text(out_path, report.to_json() + "\n");
  auto csv_path = fs::path(out_path).replace_extension(".csv").string();
  if (csv_path == out_path)
  {
    csv_path += ".csv";
  }
  write_text(csv_path, MetricsReport::csv_header() + "\n" + report.csv_row() + "\n");
  return report;
}

void run_synth(SynthOptions const &opts)
{
  ensure_dir(opts.out_dir);
  auto world = generate_synthetic_world(opts.n_tokens, opts.n_relations, opts.dim, opts.n_triples, opts.seed);

  Dataset data;
  data.pool  = std::move(world.triples);
  data.vocab = synthetic_vocabulary(opts.n_tokens, opts.n_relations, data.pool);
  world.truth.vocab_hash = data.vocab.hash();

  Manifest manifest;
  manifest.command                = "synth";
  manifest.seed                   = opts.seed;
  manifest.config["n_tokens"]     = opts.n_tokens;
  manifest.config["n_relations"]  = opts.n_relations;
  manifest.config["dim"]          = opts.dim;
  manifest.config["n_triples"]    = opts.n_triples;
  manifest.vocab_hash             = world.truth.vocab_hash;
  manifest.write(opts.out_dir);

  save_dataset(opts.out_dir, data);
  save_model(world.truth, path_in(opts.out_dir, "truth.bin"));
}

}  // namespace relfuse
