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

// End-to-end commands operating on dataset directories. A dataset directory
// holds tokens.tsv, relations.tsv and pool.tsv; every command also writes a
// manifest.json before its other outputs.

#include "relfuse/eval.hpp"
#include "relfuse/ingest.hpp"
#include "relfuse/train.hpp"
#include "relfuse/vocab.hpp"

#include <optional>
#include <string>
#include <vector>

namespace relfuse {

inline constexpr std::string_view kToolVersion = "0.1.0";

inline constexpr char const *kTokensFile    = "tokens.tsv";
inline constexpr char const *kRelationsFile = "relations.tsv";
inline constexpr char const *kPoolFile      = "pool.tsv";
inline constexpr char const *kManifestFile  = "manifest.json";

struct Dataset
{
  Vocabulary          vocab;
  std::vector<Triple> pool;
};

Dataset load_dataset(std::string const &dir);
void    save_dataset(std::string const &dir, Dataset const &data);

struct IngestOptions
{
  std::optional<std::string> text_path;
  std::optional<std::string> structured_path;
  std::optional<std::string> lexicon_path;
  std::optional<std::string> number_classes_path;
  std::uint64_t              min_round1{100};
  std::uint64_t              min_round2{50};
  std::size_t                top_k_relations{20};
  std::size_t                window{5};
  std::uint64_t              seed{0};
  std::string                out_dir;
};

struct IngestStats
{
  std::size_t raw_sentences{0};
  std::size_t sentences{0};          ///< non-empty after preprocessing
  std::size_t unique_sentences{0};
  std::size_t raw_statements{0};
  std::size_t kept_sentences{0};
  std::size_t kept_statements{0};
  std::size_t tokens{0};
  std::size_t relations{0};
  std::size_t overlap_tokens{0};     ///< tokens seen in both sources
  std::size_t structured_triples{0};
  std::size_t cooccurrence_triples{0};

  std::string to_json() const;
};

struct IngestResult
{
  Dataset     data;
  IngestStats stats;
};

/// preprocess -> concept match -> two-round prune -> top-k relations ->
/// windowed co-occurrence. Pure; does not touch the file system beyond reading.
IngestResult ingest(IngestOptions const &opts);

/// `ingest` plus writing the dataset, stats.json and the manifest.
IngestStats run_ingest(IngestOptions const &opts);

struct CarveOptions
{
  std::string              data_dir;
  std::string              out_dir;
  Slot                     slot{Slot::R};
  std::size_t              n_pairs{1000};
  std::vector<std::string> transfer_tokens;  ///< non-empty selects the transfer split
  std::uint64_t            seed{0};
  bool                     structured_only{false};
};

/// Writes testset.jsonl plus the reduced dataset to `out_dir`.
TestSet run_carve(CarveOptions const &opts);

/// Writes model.bin, metrics.csv, report.json to `out_dir`.
TrainReport run_train(std::string const &data_dir, std::string const &config_path, std::string const &out_dir);

/// Writes the report as JSON to `out_path` and as CSV next to it.
MetricsReport run_evaluate(std::string const &model_path, std::string const &testset_path,
                           std::string const &out_path);

struct SynthOptions
{
  std::size_t   n_tokens{50};
  std::size_t   n_relations{4};
  std::size_t   dim{8};
  std::size_t   n_triples{10000};
  std::uint64_t seed{0};
  std::string   out_dir;
};

/// Writes the sampled dataset and the planted embedding as truth.bin.
void run_synth(SynthOptions const &opts);

}  // namespace relfuse
