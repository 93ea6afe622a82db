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

// Command-line front end. Everything goes through the C interface in
// librelfuse; exit codes are the rf_status values.

#include "relfuse/relfuse.h"

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

int report(rf_status status)
{
  if (status != RF_OK)
  {
    std::fprintf(stderr, "error: %s\n", rf_last_error());
  }
  return static_cast<int>(status);
}

rf_slot parse_slot(std::string const &text)
{
  if (text == "S" || text == "s")
  {
    return RF_SLOT_S;
  }
  if (text == "O" || text == "o")
  {
    return RF_SLOT_O;
  }
  return RF_SLOT_R;
}

using VocabPtr = std::unique_ptr<rf_vocab, decltype(&rf_vocab_free)>;
using ModelPtr = std::unique_ptr<rf_model, decltype(&rf_model_free)>;

// Resolves a token or relation surface, printing prefix suggestions on failure.
bool resolve(rf_vocab const *vocab, std::string const &surface, bool relation, int32_t &id)
{
  auto const status = relation ? rf_vocab_relation_id(vocab, surface.c_str(), &id)
                               : rf_vocab_token_id(vocab, surface.c_str(), &id);
  if (status == RF_OK)
  {
    return true;
  }
  std::fprintf(stderr, "error: %s\n", rf_last_error());
  char const *suggestions[5];
  auto const  n = rf_vocab_suggest(vocab, surface.c_str(), suggestions, 5);
  if (n > 0)
  {
    std::fprintf(stderr, "did you mean:\n");
    for (size_t i = 0; i < n; ++i)
    {
      std::fprintf(stderr, "  %s\n", suggestions[i]);
    }
  }
  return false;
}

int predict(std::string const &model_path, std::string const &vocab_dir, std::string const &slot_text,
            std::string const &a, std::string const &b, std::size_t top_n)
{
  rf_model *raw_model = nullptr;
  if (auto s = rf_model_load(model_path.c_str(), &raw_model); s != RF_OK)
  {
    return report(s);
  }
  ModelPtr  model(raw_model, &rf_model_free);
  rf_vocab *raw_vocab = nullptr;
  if (auto s = rf_vocab_load(vocab_dir.c_str(), &raw_vocab); s != RF_OK)
  {
    return report(s);
  }
  VocabPtr vocab(raw_vocab, &rf_vocab_free);

  if (std::string(rf_model_vocab_hash(model.get())) != rf_vocab_hash(vocab.get()))
  {
    std::fprintf(stderr, "error: vocabulary hash mismatch: model %s, vocabulary %s\n",
                 rf_model_vocab_hash(model.get()), rf_vocab_hash(vocab.get()));
    return RF_ERR_DATA;
  }

  auto const slot = parse_slot(slot_text);
  int32_t    fixed_a = 0;
  int32_t    fixed_b = 0;
  // Fixed ids in triple order: (r, o) for S, (s, o) for R, (s, r) for O.
  bool const a_is_relation = slot == RF_SLOT_S;
  bool const b_is_relation = slot == RF_SLOT_O;
  if (!resolve(vocab.get(), a, a_is_relation, fixed_a) || !resolve(vocab.get(), b, b_is_relation, fixed_b))
  {
    return RF_ERR_DATA;
  }

  auto const           n = rf_model_candidate_count(model.get(), slot);
  std::vector<double>  probs(n);
  std::vector<int32_t> order(n);
  if (auto s = rf_model_conditional(model.get(), slot, fixed_a, fixed_b, probs.data(), n); s != RF_OK)
  {
    return report(s);
  }
  if (auto s = rf_model_rank(model.get(), slot, fixed_a, fixed_b, order.data(), n); s != RF_OK)
  {
    return report(s);
  }

  std::printf("rank\tcandidate\tprobability\n");
  for (std::size_t i = 0; i < n && i < top_n; ++i)
  {
    auto const  id   = order[i];
    char const *name = slot == RF_SLOT_R ? rf_vocab_relation_name(vocab.get(), id)
                                         : rf_vocab_token_surface(vocab.get(), id);
    std::printf("%zu\t%s\t%.17g\n", i + 1, name, probs[static_cast<std::size_t>(id)]);
  }
  return RF_OK;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"relfuse: joint token/relation embeddings for knowledge-graph completion"};
  app.set_version_flag("--version", std::string(rf_version()));
  app.require_subcommand(1);

  // ingest
  rf_ingest_options ingest_opts;
  rf_ingest_options_init(&ingest_opts);
  std::string text_path, structured_path, lexicon_path, classes_path, ingest_out;
  auto       *ingest = app.add_subcommand("ingest", "Build a triple pool and vocabulary from text and/or triples");
  ingest->add_option("--text", text_path, "Text corpus, one sentence per line")->check(CLI::ExistingFile);
  ingest->add_option("--structured", structured_path, "Triple TSV (subject, relation, object)")
      ->check(CLI::ExistingFile);
  ingest->add_option("--lexicon", lexicon_path, "Lexicon TSV (phrase, concept token)")->check(CLI::ExistingFile);
  ingest->add_option("--number-classes", classes_path, "Number class TSV (regex, class token)")
      ->check(CLI::ExistingFile);
  ingest->add_option("--min-round1", ingest_opts.min_round1, "First-round frequency threshold")
      ->capture_default_str();
  ingest->add_option("--min-round2", ingest_opts.min_round2, "Second-round frequency threshold")
      ->capture_default_str();
  ingest->add_option("--top-k", ingest_opts.top_k_relations, "Structured relations to retain")->capture_default_str();
  ingest->add_option("--window", ingest_opts.window, "Co-occurrence window")->capture_default_str();
  ingest->add_option("--seed", ingest_opts.seed, "Seed recorded in the manifest")->capture_default_str();
  ingest->add_option("--out", ingest_out, "Output dataset directory")->required();

  // carve
  rf_carve_options carve_opts;
  rf_carve_options_init(&carve_opts);
  std::string              carve_data, carve_out, carve_slot = "R";
  std::vector<std::string> transfer;
  bool                     structured_only = false;
  auto *carve = app.add_subcommand("carve", "Carve a completion test set out of a dataset");
  carve->add_option("--data", carve_data, "Input dataset directory")->required();
  carve->add_option("--out", carve_out, "Output directory")->required();
  carve->add_option("--slot", carve_slot, "Slot to predict: S, R or O")
      ->check(CLI::IsMember({"S", "R", "O", "s", "r", "o"}))
      ->capture_default_str();
  carve->add_option("--pairs", carve_opts.n_pairs, "Number of fixed pairs")->capture_default_str();
  carve->add_option("--transfer", transfer, "Tokens to strip from the structured source (transfer split)");
  carve->add_option("--seed", carve_opts.seed, "Random seed")->capture_default_str();
  carve->add_flag("--structured-only", structured_only, "Only carve structured triples");

  // train
  std::string train_data, train_config, train_out;
  auto       *train = app.add_subcommand("train", "Fit an embedding to a dataset");
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--config", train_config, "Training configuration (key = value)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Output directory")->required();

  // evaluate
  std::string eval_model, eval_testset, eval_out;
  auto       *evaluate = app.add_subcommand("evaluate", "Score a model on a test set");
  evaluate->add_option("--model", eval_model, "Model file")->required();
  evaluate->add_option("--testset", eval_testset, "Test set (JSON lines)")->required();
  evaluate->add_option("--out", eval_out, "Report path (.json; a .csv is written alongside)")->required();

  // predict
  std::string predict_model, predict_vocab, predict_slot = "R", predict_a, predict_b;
  std::size_t top_n   = 10;
  auto       *predict_cmd = app.add_subcommand("predict", "Rank completions of a partial triple");
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--vocab", predict_vocab, "Dataset directory holding the vocabulary")->required();
  predict_cmd->add_option("--slot", predict_slot, "Slot to predict: S, R or O")
      ->check(CLI::IsMember({"S", "R", "O", "s", "r", "o"}))
      ->capture_default_str();
  predict_cmd
      ->add_option("first", predict_a, "First fixed element (relation for S, subject for R and O)")
      ->required();
  predict_cmd->add_option("second", predict_b, "Second fixed element (object for S and R, relation for O)")
      ->required();
  predict_cmd->add_option("--top", top_n, "Number of completions to print")->capture_default_str();

  // synth
  rf_synth_options synth_opts;
  rf_synth_options_init(&synth_opts);
  std::string synth_out;
  auto       *synth = app.add_subcommand("synth", "Sample a dataset from a planted embedding");
  synth->add_option("--tokens", synth_opts.n_tokens, "Number of tokens")->capture_default_str();
  synth->add_option("--relations", synth_opts.n_relations, "Number of relations")->capture_default_str();
  synth->add_option("--dim", synth_opts.dim, "Embedding dimension")->capture_default_str();
  synth->add_option("--triples", synth_opts.n_triples, "Triples to sample")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::ParseError const &e)
  {
    auto const code = app.exit(e);
    return code == 0 ? 0 : RF_ERR_USAGE;
  }

  if (*ingest)
  {
    ingest_opts.text_path           = text_path.empty() ? nullptr : text_path.c_str();
    ingest_opts.structured_path     = structured_path.empty() ? nullptr : structured_path.c_str();
    ingest_opts.lexicon_path        = lexicon_path.empty() ? nullptr : lexicon_path.c_str();
    ingest_opts.number_classes_path = classes_path.empty() ? nullptr : classes_path.c_str();
    ingest_opts.out_dir             = ingest_out.c_str();
    return report(rf_ingest(&ingest_opts));
  }
  if (*carve)
  {
    std::vector<char const *> tokens;
    for (auto const &t : transfer)
    {
      tokens.push_back(t.c_str());
    }
    carve_opts.data_dir          = carve_data.c_str();
    carve_opts.out_dir           = carve_out.c_str();
    carve_opts.slot              = parse_slot(carve_slot);
    carve_opts.transfer_tokens   = tokens.data();
    carve_opts.n_transfer_tokens = tokens.size();
    carve_opts.structured_only   = structured_only ? 1 : 0;
    return report(rf_carve(&carve_opts));
  }
  if (*train)
  {
    return report(rf_train(train_data.c_str(), train_config.c_str(), train_out.c_str()));
  }
  if (*evaluate)
  {
    rf_metrics metrics{};
    auto const status = rf_evaluate_files(eval_model.c_str(), eval_testset.c_str(), eval_out.c_str(), &metrics);
    if (status == RF_OK)
    {
      std::printf("mrr_best\t%.6f\nprobability_mass\t%.6f\nbaseline_mass\t%.6f\nn_tasks\t%lld\n", metrics.mrr_best,
                  metrics.probability_mass, metrics.baseline_mass, static_cast<long long>(metrics.n_tasks));
    }
    return report(status);
  }
  if (*predict_cmd)
  {
    return predict(predict_model, predict_vocab, predict_slot, predict_a, predict_b, top_n);
  }
  if (*synth)
  {
    synth_opts.out_dir = synth_out.c_str();
    return report(rf_synth(&synth_opts));
  }
  return RF_ERR_USAGE;
}
