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

#include "relfuse/relfuse.h"

#include "relfuse/workflow.hpp"

#include <cstring>
#include <filesystem>
#include <memory>
#include <new>

struct rf_vocab
{
  relfuse::Vocabulary vocab;
  std::string         hash;
};

struct rf_model
{
  relfuse::Embedding theta;
};

struct rf_testset
{
  relfuse::TestSet testset;
};

namespace {

thread_local std::string g_last_error;

rf_status set_error(rf_status status, std::string message)
{
  g_last_error = std::move(message);
  return status;
}

rf_status to_status(relfuse::ErrorKind kind)
{
  switch (kind)
  {
  case relfuse::ErrorKind::usage:
    return RF_ERR_USAGE;
  case relfuse::ErrorKind::data:
    return RF_ERR_DATA;
  case relfuse::ErrorKind::numerical:
    return RF_ERR_NUMERICAL;
  }
  return RF_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
rf_status guarded(F &&body)
{
  try
  {
    g_last_error.clear();
    body();
    return RF_OK;
  }
  catch (relfuse::Error const &e)
  {
    return set_error(to_status(e.kind()), e.what());
  }
  catch (std::bad_alloc const &)
  {
    return set_error(RF_ERR_INTERNAL, "out of memory");
  }
  catch (std::exception const &e)
  {
    return set_error(RF_ERR_INTERNAL, e.what());
  }
}

rf_status null_argument(char const *name)
{
  return set_error(RF_ERR_USAGE, std::string("null argument: ") + name);
}

relfuse::Slot to_slot(rf_slot slot)
{
  switch (slot)
  {
  case RF_SLOT_S:
    return relfuse::Slot::S;
  case RF_SLOT_R:
    return relfuse::Slot::R;
  case RF_SLOT_O:
    return relfuse::Slot::O;
  }
  relfuse::fail(relfuse::ErrorKind::usage, "invalid slot value " + std::to_string(static_cast<int>(slot)));
}

std::optional<std::string> optional_path(char const *p)
{
  if (p == nullptr || *p == '\0')
  {
    return std::nullopt;
  }
  return std::string(p);
}

void fill_metrics(relfuse::MetricsReport const &report, rf_metrics *out)
{
  if (out == nullptr)
  {
    return;
  }
  out->mrr_best           = report.mrr_best;
  out->probability_mass   = report.mean_probability_mass;
  out->baseline_mass      = report.baseline_mass;
  out->mean_correct_count = report.mean_correct_count;
  out->n_tasks            = static_cast<int64_t>(report.n_tasks);
}

}  // namespace

extern "C" {

const char *rf_version(void)
{
  return relfuse::kToolVersion.data();
}

const char *rf_last_error(void)
{
  return g_last_error.c_str();
}

rf_status rf_vocab_load(const char *dir, rf_vocab **out)
{
  if (dir == nullptr || out == nullptr)
  {
    return null_argument("dir/out");
  }
  *out = nullptr;
  return guarded([&] {
    auto handle   = std::make_unique<rf_vocab>();
    handle->vocab = relfuse::Vocabulary::load((std::filesystem::path(dir) / relfuse::kTokensFile).string(),
                                              (std::filesystem::path(dir) / relfuse::kRelationsFile).string());
    handle->hash  = handle->vocab.hash();
    *out          = handle.release();
  });
}

void rf_vocab_free(rf_vocab *vocab)
{
  delete vocab;
}

size_t rf_vocab_token_count(const rf_vocab *vocab)
{
  return vocab == nullptr ? 0 : vocab->vocab.token_count();
}

size_t rf_vocab_relation_count(const rf_vocab *vocab)
{
  return vocab == nullptr ? 0 : vocab->vocab.relation_count();
}

rf_status rf_vocab_token_id(const rf_vocab *vocab, const char *surface, int32_t *id)
{
  if (vocab == nullptr || surface == nullptr || id == nullptr)
  {
    return null_argument("vocab/surface/id");
  }
  auto found = vocab->vocab.token_id(surface);
  if (!found)
  {
    return set_error(RF_ERR_DATA, std::string("unknown token '") + surface + "'");
  }
  *id = *found;
  return RF_OK;
}

rf_status rf_vocab_relation_id(const rf_vocab *vocab, const char *name, int32_t *id)
{
  if (vocab == nullptr || name == nullptr || id == nullptr)
  {
    return null_argument("vocab/name/id");
  }
  auto found = vocab->vocab.relation_id(name);
  if (!found)
  {
    return set_error(RF_ERR_DATA, std::string("unknown relation '") + name + "'");
  }
  *id = *found;
  return RF_OK;
}

const char *rf_vocab_token_surface(const rf_vocab *vocab, int32_t id)
{
  if (vocab == nullptr || id < 0 || static_cast<size_t>(id) >= vocab->vocab.token_count())
  {
    return nullptr;
  }
  return vocab->vocab.token(id).surface.c_str();
}

const char *rf_vocab_relation_name(const rf_vocab *vocab, int32_t id)
{
  if (vocab == nullptr || id < 0 || static_cast<size_t>(id) >= vocab->vocab.relation_count())
  {
    return nullptr;
  }
  return vocab->vocab.relation(id).name.c_str();
}

const char *rf_vocab_hash(const rf_vocab *vocab)
{
  return vocab == nullptr ? nullptr : vocab->hash.c_str();
}

size_t rf_vocab_suggest(const rf_vocab *vocab, const char *query, const char **out, size_t max)
{
  if (vocab == nullptr || query == nullptr || out == nullptr)
  {
    return 0;
  }
  auto const   matches = vocab->vocab.suggest(query, max);
  size_t       n       = 0;
  for (auto const &m : matches)
  {
    // Hand out pointers into the vocabulary's own storage.
    if (auto id = vocab->vocab.token_id(m))
    {
      out[n++] = vocab->vocab.token(*id).surface.c_str();
    }
    else if (auto rid = vocab->vocab.relation_id(m))
    {
      out[n++] = vocab->vocab.relation(*rid).name.c_str();
    }
  }
  return n;
}

rf_status rf_model_load(const char *path, rf_model **out)
{
  if (path == nullptr || out == nullptr)
  {
    return null_argument("path/out");
  }
  *out = nullptr;
  return guarded([&] {
    auto handle   = std::make_unique<rf_model>();
    handle->theta = relfuse::load_model(path);
    *out          = handle.release();
  });
}

void rf_model_free(rf_model *model)
{
  delete model;
}

size_t rf_model_token_count(const rf_model *model)
{
  return model == nullptr ? 0 : model->theta.tokens();
}

size_t rf_model_relation_count(const rf_model *model)
{
  return model == nullptr ? 0 : model->theta.relations();
}

size_t rf_model_dim(const rf_model *model)
{
  return model == nullptr ? 0 : model->theta.dim();
}

const char *rf_model_vocab_hash(const rf_model *model)
{
  return model == nullptr ? nullptr : model->theta.vocab_hash.c_str();
}

rf_status rf_model_energy(const rf_model *model, int32_t s, int32_t r, int32_t o, double *energy)
{
  if (model == nullptr || energy == nullptr)
  {
    return null_argument("model/energy");
  }
  return guarded([&] { *energy = relfuse::energy(model->theta, s, r, o); });
}

size_t rf_model_candidate_count(const rf_model *model, rf_slot slot)
{
  if (model == nullptr)
  {
    return 0;
  }
  return slot == RF_SLOT_R ? model->theta.relations() : model->theta.tokens();
}

rf_status rf_model_conditional(const rf_model *model, rf_slot slot, int32_t fixed_a, int32_t fixed_b,
                               double *probabilities, size_t len)
{
  if (model == nullptr || probabilities == nullptr)
  {
    return null_argument("model/probabilities");
  }
  return guarded([&] {
    auto const probs = relfuse::conditional_distribution(model->theta, {to_slot(slot), fixed_a, fixed_b});
    if (len != probs.size())
    {
      relfuse::fail(relfuse::ErrorKind::usage, "output length " + std::to_string(len) + " does not match " +
                                                   std::to_string(probs.size()) + " candidates");
    }
    std::memcpy(probabilities, probs.data(), probs.size() * sizeof(double));
  });
}

rf_status rf_model_rank(const rf_model *model, rf_slot slot, int32_t fixed_a, int32_t fixed_b, int32_t *ids,
                        size_t len)
{
  if (model == nullptr || ids == nullptr)
  {
    return null_argument("model/ids");
  }
  return guarded([&] {
    auto const order = relfuse::rank_completions(model->theta, {to_slot(slot), fixed_a, fixed_b});
    if (len != order.size())
    {
      relfuse::fail(relfuse::ErrorKind::usage, "output length " + std::to_string(len) + " does not match " +
                                                   std::to_string(order.size()) + " candidates");
    }
    std::memcpy(ids, order.data(), order.size() * sizeof(int32_t));
  });
}

rf_status rf_testset_load(const char *path, rf_testset **out)
{
  if (path == nullptr || out == nullptr)
  {
    return null_argument("path/out");
  }
  *out = nullptr;
  return guarded([&] {
    auto handle     = std::make_unique<rf_testset>();
    handle->testset = relfuse::TestSet::load(path);
    *out            = handle.release();
  });
}

void rf_testset_free(rf_testset *testset)
{
  delete testset;
}

size_t rf_testset_size(const rf_testset *testset)
{
  return testset == nullptr ? 0 : testset->testset.tasks.size();
}

rf_status rf_evaluate(const rf_model *model, const rf_testset *testset, rf_metrics *out)
{
  if (model == nullptr || testset == nullptr || out == nullptr)
  {
    return null_argument("model/testset/out");
  }
  return guarded([&] { fill_metrics(relfuse::evaluate(model->theta, testset->testset), out); });
}

void rf_ingest_options_init(rf_ingest_options *opts)
{
  if (opts == nullptr)
  {
    return;
  }
  *opts                 = rf_ingest_options{};
  opts->min_round1      = 100;
  opts->min_round2      = 50;
  opts->top_k_relations = 20;
  opts->window          = 5;
}

rf_status rf_ingest(const rf_ingest_options *opts)
{
  if (opts == nullptr || opts->out_dir == nullptr)
  {
    return null_argument("opts/out_dir");
  }
  return guarded([&] {
    relfuse::IngestOptions o;
    o.text_path           = optional_path(opts->text_path);
    o.structured_path     = optional_path(opts->structured_path);
    o.lexicon_path        = optional_path(opts->lexicon_path);
    o.number_classes_path = optional_path(opts->number_classes_path);
    o.min_round1          = opts->min_round1;
    o.min_round2          = opts->min_round2;
    o.top_k_relations     = opts->top_k_relations;
    o.window              = opts->window;
    o.seed                = opts->seed;
    o.out_dir             = opts->out_dir;
    relfuse::run_ingest(o);
  });
}

void rf_carve_options_init(rf_carve_options *opts)
{
  if (opts == nullptr)
  {
    return;
  }
  *opts         = rf_carve_options{};
  opts->slot    = RF_SLOT_R;
  opts->n_pairs = 1000;
}

rf_status rf_carve(const rf_carve_options *opts)
{
  if (opts == nullptr || opts->data_dir == nullptr || opts->out_dir == nullptr)
  {
    return null_argument("opts/data_dir/out_dir");
  }
  if (opts->n_transfer_tokens > 0 && opts->transfer_tokens == nullptr)
  {
    return null_argument("transfer_tokens");
  }
  return guarded([&] {
    relfuse::CarveOptions o;
    o.data_dir = opts->data_dir;
    o.out_dir  = opts->out_dir;
    o.slot     = to_slot(opts->slot);
    o.n_pairs  = opts->n_pairs;
    for (size_t i = 0; i < opts->n_transfer_tokens; ++i)
    {
      o.transfer_tokens.emplace_back(opts->transfer_tokens[i]);
    }
    o.seed            = opts->seed;
    o.structured_only = opts->structured_only != 0;
    relfuse::run_carve(o);
  });
}

rf_status rf_train(const char *data_dir, const char *config_path, const char *out_dir)
{
  if (data_dir == nullptr || config_path == nullptr || out_dir == nullptr)
  {
    return null_argument("data_dir/config_path/out_dir");
  }
  return guarded([&] { relfuse::run_train(data_dir, config_path, out_dir); });
}

rf_status rf_evaluate_files(const char *model_path, const char *testset_path, const char *out_path, rf_metrics *out)
{
  if (model_path == nullptr || testset_path == nullptr || out_path == nullptr)
  {
    return null_argument("model_path/testset_path/out_path");
  }
  return guarded([&] { fill_metrics(relfuse::run_evaluate(model_path, testset_path, out_path), out); });
}

void rf_synth_options_init(rf_synth_options *opts)
{
  if (opts == nullptr)
  {
    return;
  }
  *opts             = rf_synth_options{};
  opts->n_tokens    = 50;
  opts->n_relations = 4;
  opts->dim         = 8;
  opts->n_triples   = 10000;
}

rf_status rf_synth(const rf_synth_options *opts)
{
  if (opts == nullptr || opts->out_dir == nullptr)
  {
    return null_argument("opts/out_dir");
  }
  return guarded([&] {
    relfuse::SynthOptions o;
    o.n_tokens    = opts->n_tokens;
    o.n_relations = opts->n_relations;
    o.dim         = opts->dim;
    o.n_triples   = opts->n_triples;
    o.seed        = opts->seed;
    o.out_dir     = opts->out_dir;
    relfuse::run_synth(o);
  });
}

}  // extern "C"
