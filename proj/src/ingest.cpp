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

#include "relfuse/ingest.hpp"

#include "relfuse/sampler.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace relfuse {
namespace {

bool is_word_byte(unsigned char c)
{
  return std::isalnum(c) || c >= 0x80;
}

bool is_space(unsigned char c)
{
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_numeric_literal(std::string_view s)
{
  static std::regex const pattern(R"([+-]?[0-9]+([.,:/-][0-9]+)*%?)");
  return std::regex_match(s.begin(), s.end(), pattern);
}

std::string join_words(std::span<std::string const> words)
{
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i)
  {
    if (i > 0)
    {
      out += ' ';
    }
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_tabs(std::string const &line)
{
  std::vector<std::string> fields;
  std::stringstream        ss(line);
  std::string              field;
  while (std::getline(ss, field, '\t'))
  {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == '\t')
  {
    fields.emplace_back();
  }
  return fields;
}

// Calls `visit(lineno, fields)` for every non-comment, non-blank line.
void for_each_tsv_line(std::string const &path, std::size_t expected_fields,
                       std::function<void(std::size_t, std::vector<std::string> &)> const &visit)
{
  std::ifstream in(path);
  if (!in)
  {
    fail(ErrorKind::data, "cannot open '" + path + "'");
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#')
    {
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != expected_fields)
    {
      fail(ErrorKind::data, path + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected_fields) +
                                " tab-separated fields, got " + std::to_string(fields.size()));
    }
    for (auto const &f : fields)
    {
      if (f.empty())
      {
        fail(ErrorKind::data, path + ":" + std::to_string(lineno) + ": empty field");
      }
    }
    visit(lineno, fields);
  }
}

Vector random_unit(Rng &rng, std::size_t dim)
{
  Vector x(static_cast<Eigen::Index>(dim));
  do
  {
    for (Eigen::Index i = 0; i < x.size(); ++i)
    {
      x[i] = standard_normal(rng);
    }
  } while (x.norm() < 1e-6);
  return x / x.norm();
}

Matrix random_rotation(Rng &rng, std::size_t dim)
{
  auto const d = static_cast<Eigen::Index>(dim);
  Matrix     a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i)
  {
    a.data()[i] = standard_normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix                       q = qr.householderQ();
  Matrix                       r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign fix makes Q Haar-distributed; the column flip then forces det = +1.
  for (Eigen::Index j = 0; j < d; ++j)
  {
    if (r(j, j) < 0)
    {
      q.col(j) *= -1.0;
    }
  }
  if (q.determinant() < 0)
  {
    q.col(0) *= -1.0;
  }
  return q;
}

}  // namespace

void NumberClasses::add(std::string const &pattern, std::string token)
{
  try
  {
    rules_.emplace_back(std::regex(pattern), std::move(token));
  }
  catch (std::regex_error const &e)
  {
    fail(ErrorKind::usage, "invalid number-class pattern '" + pattern + "': " + e.what());
  }
}

NumberClasses NumberClasses::load(std::string const &path)
{
  NumberClasses classes;
  for_each_tsv_line(path, 2, [&](std::size_t, std::vector<std::string> &f) { classes.add(f[0], f[1]); });
  return classes;
}

std::optional<std::string> NumberClasses::classify(std::string_view raw) const
{
  for (auto const &[pattern, token] : rules_)
  {
    if (std::regex_match(raw.begin(), raw.end(), pattern))
    {
      return token;
    }
  }
  return std::nullopt;
}

std::optional<Sentence> preprocess_text(std::string_view raw_line, NumberClasses const *classes)
{
  Sentence    out;
  std::size_t i = 0;
  while (i < raw_line.size())
  {
    while (i < raw_line.size() && is_space(static_cast<unsigned char>(raw_line[i])))
    {
      ++i;
    }
    auto const start = i;
    while (i < raw_line.size() && !is_space(static_cast<unsigned char>(raw_line[i])))
    {
      ++i;
    }
    auto token = raw_line.substr(start, i - start);

    // Trim surrounding punctuation, keeping leading signs on numbers.
    while (!token.empty() && !is_word_byte(static_cast<unsigned char>(token.back())) && token.back() != '%')
    {
      token.remove_suffix(1);
    }
    while (!token.empty() && !is_word_byte(static_cast<unsigned char>(token.front())) &&
           !((token.front() == '-' || token.front() == '+') && token.size() > 1 &&
             std::isdigit(static_cast<unsigned char>(token[1]))))
    {
      token.remove_prefix(1);
    }
    if (token.empty())
    {
      continue;
    }

    if (classes != nullptr)
    {
      if (auto cls = classes->classify(token))
      {
        out.push_back(*cls);
        continue;
      }
    }
    if (is_numeric_literal(token))
    {
      out.emplace_back(kNumberToken);
      continue;
    }

    std::string piece;
    auto        flush = [&] {
      if (piece.empty())
      {
        return;
      }
      if (std::all_of(piece.begin(), piece.end(), [](unsigned char c) { return std::isdigit(c); }))
      {
        out.emplace_back(kNumberToken);
      }
      else
      {
        out.push_back(piece);
      }
      piece.clear();
    };
    for (std::size_t k = 0; k < token.size(); ++k)
    {
      auto const c = static_cast<unsigned char>(token[k]);
      if (is_word_byte(c))
      {
        piece += static_cast<char>(std::tolower(c));
      }
      else if (c == '-' && !piece.empty() && k + 1 < token.size() &&
               is_word_byte(static_cast<unsigned char>(token[k + 1])))
      {
        piece += '-';
      }
      else
      {
        flush();
      }
    }
    flush();
  }
  if (out.empty())
  {
    return std::nullopt;
  }
  return out;
}

void Lexicon::add(std::string const &phrase, std::string concept_token)
{
  auto words = preprocess_text(phrase);
  if (!words)
  {
    fail(ErrorKind::data, "lexicon phrase '" + phrase + "' is empty after normalisation");
  }
  max_words_ = std::max(max_words_, words->size());
  entries_.insert_or_assign(join_words(*words), std::move(concept_token));
}

Lexicon Lexicon::load(std::string const &path)
{
  Lexicon lexicon;
  for_each_tsv_line(path, 2, [&](std::size_t, std::vector<std::string> &f) { lexicon.add(f[0], f[1]); });
  return lexicon;
}

std::optional<std::string> Lexicon::find(std::string const &phrase) const
{
  auto it = entries_.find(phrase);
  if (it == entries_.end())
  {
    return std::nullopt;
  }
  return it->second;
}

std::vector<std::string> Lexicon::concepts() const
{
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (auto const &[phrase, target] : entries_)
  {
    out.push_back(target);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Sentence greedy_concept_match(Sentence const &sentence, Lexicon const &lexicon)
{
  if (lexicon.empty())
  {
    return sentence;
  }
  Sentence    out;
  std::size_t i = 0;
  while (i < sentence.size())
  {
    bool matched = false;
    for (auto len = std::min(lexicon.max_words(), sentence.size() - i); len >= 1; --len)
    {
      auto const phrase = join_words(std::span<std::string const>(sentence).subspan(i, len));
      if (auto target = lexicon.find(phrase))
      {
        out.push_back(*target);
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched)
    {
      out.push_back(sentence[i]);
      ++i;
    }
  }
  return out;
}

std::vector<Triple> window_cooccurrence(std::span<TokenId const> sentence, RelationId relation, std::size_t window)
{
  if (window < 1)
  {
    fail(ErrorKind::usage, "co-occurrence window must be at least 1");
  }
  std::vector<Triple> out;
  out.reserve(cooccurrence_count(sentence.size(), window));
  for (std::size_t i = 0; i < sentence.size(); ++i)
  {
    for (std::size_t j = i + 1; j < sentence.size() && j - i <= window; ++j)
    {
      out.push_back({sentence[i], relation, sentence[j], Source::co_occurrence});
    }
  }
  return out;
}

std::size_t cooccurrence_count(std::size_t n, std::size_t window)
{
  std::size_t total = 0;
  for (std::size_t gap = 1; gap <= window && gap < n; ++gap)
  {
    total += n - gap;
  }
  return total;
}

std::vector<RawTriple> read_raw_triples(std::string const &path)
{
  std::vector<RawTriple> out;
  for_each_tsv_line(path, 3, [&](std::size_t, std::vector<std::string> &f) {
    out.push_back({std::move(f[0]), std::move(f[1]), std::move(f[2])});
  });
  return out;
}

std::vector<Triple> load_structured(std::string const &path, Vocabulary const &vocab, UnknownPolicy policy,
                                    LoadReport *report)
{
  std::vector<Triple> out;
  LoadReport          local;
  for_each_tsv_line(path, 3, [&](std::size_t lineno, std::vector<std::string> &f) {
    auto const s = vocab.token_id(f[0]);
    auto const r = vocab.relation_id(f[1]);
    auto const o = vocab.token_id(f[2]);
    if (!s || !r || !o)
    {
      std::string const missing = !s ? "token '" + f[0] + "'" : !r ? "relation '" + f[1] + "'" : "token '" + f[2] + "'";
      if (policy == UnknownPolicy::fail)
      {
        fail(ErrorKind::data, path + ":" + std::to_string(lineno) + ": unknown " + missing);
      }
      ++local.skipped;
      if (local.unknown.size() < 10)
      {
        local.unknown.push_back(missing);
      }
      return;
    }
    out.push_back({*s, *r, *o, vocab.relation(*r).source});
  });
  if (report != nullptr)
  {
    *report = std::move(local);
  }
  return out;
}

void save_triples(std::string const &path, std::span<Triple const> triples, Vocabulary const &vocab)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    fail(ErrorKind::data, "cannot write '" + path + "'");
  }
  for (auto const &t : triples)
  {
    out << vocab.token(t.s).surface << '\t' << vocab.relation(t.r).name << '\t' << vocab.token(t.o).surface << '\n';
  }
}

std::vector<Triple> mix_datasets(std::span<Triple const> structured, std::span<Triple const> unstructured,
                                 MixSpec const &spec)
{
  if (spec.n_structured == 0 && spec.n_unstructured == 0)
  {
    fail(ErrorKind::usage, "mix spec requests zero triples from both sources");
  }
  if (spec.n_structured > structured.size())
  {
    fail(ErrorKind::data, "mix spec requests " + std::to_string(spec.n_structured) + " structured triples but only " +
                              std::to_string(structured.size()) + " are available (short by " +
                              std::to_string(spec.n_structured - structured.size()) + ")");
  }
  if (spec.n_unstructured > unstructured.size())
  {
    fail(ErrorKind::data, "mix spec requests " + std::to_string(spec.n_unstructured) +
                              " co-occurrence triples but only " + std::to_string(unstructured.size()) +
                              " are available (short by " + std::to_string(spec.n_unstructured - unstructured.size()) +
                              ")");
  }

  Rng                 rng(spec.seed);
  std::vector<Triple> pool;
  pool.reserve(spec.n_structured + spec.n_unstructured);
  auto draw = [&](std::span<Triple const> source, std::size_t n) {
    std::vector<std::size_t> idx(source.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i)
    {
      std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
      pool.push_back(source[idx[i]]);
    }
  };
  draw(structured, spec.n_structured);
  draw(unstructured, spec.n_unstructured);
  for (std::size_t i = pool.size(); i > 1; --i)
  {
    std::swap(pool[i - 1], pool[uniform_index(rng, i)]);
  }
  return pool;
}

SyntheticWorld generate_synthetic_world(std::size_t n_tokens, std::size_t n_relations, std::size_t dim,
                                        std::size_t n_triples, std::uint64_t seed)
{
  if (n_tokens < 4)
  {
    fail(ErrorKind::usage, "synthetic world needs at least 4 tokens");
  }
  if (n_relations < 1)
  {
    fail(ErrorKind::usage, "synthetic world needs at least 1 relation");
  }
  if (dim < 1)
  {
    fail(ErrorKind::usage, "synthetic world needs dimension at least 1");
  }
  auto const cells = static_cast<double>(n_tokens) * static_cast<double>(n_tokens) * static_cast<double>(n_relations);
  if (cells > kEnumerationLimit)
  {
    fail(ErrorKind::usage, "synthetic world of W^2 R = " + std::to_string(cells) +
                               " triples exceeds the exact-sampling limit of 1e7");
  }

  Rng            rng(seed);
  SyntheticWorld world;
  world.truth = Embedding::zeros(n_tokens, n_relations, dim);
  for (std::size_t t = 0; t < n_tokens; ++t)
  {
    world.truth.c.row(static_cast<Eigen::Index>(t)) = random_unit(rng, dim).transpose();
  }
  for (std::size_t t = 0; t < n_tokens; ++t)
  {
    world.truth.v.row(static_cast<Eigen::Index>(t)) = random_unit(rng, dim).transpose();
  }
  auto const d           = static_cast<Eigen::Index>(dim);
  auto const translation = 0.1 / std::sqrt(static_cast<double>(dim));
  for (auto &G : world.truth.G)
  {
    G.leftCols(d) = random_rotation(rng, dim);
    for (Eigen::Index i = 0; i < d; ++i)
    {
      G(i, d) = translation * standard_normal(rng);
    }
  }

  // Exact joint by enumeration, laid out as ((s * R) + r) * W + o.
  auto const          log_z = exact_log_partition(world.truth);
  std::vector<double> cumulative;
  cumulative.reserve(static_cast<std::size_t>(cells));
  double running = 0.0;
  for (std::size_t s = 0; s < n_tokens; ++s)
  {
    for (std::size_t r = 0; r < n_relations; ++r)
    {
      auto const energies =
          candidate_energies(world.truth, {Slot::O, static_cast<std::int32_t>(s), static_cast<std::int32_t>(r)});
      for (double e : energies)
      {
        running += std::exp(-e - log_z);
        cumulative.push_back(running);
      }
    }
  }

  world.triples.reserve(n_triples);
  for (std::size_t n = 0; n < n_triples; ++n)
  {
    auto const u   = uniform01(rng) * running;
    auto       it  = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto       idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                  static_cast<std::ptrdiff_t>(cumulative.size() - 1)));
    auto const o   = idx % n_tokens;
    idx /= n_tokens;
    auto const r = idx % n_relations;
    auto const s = idx / n_relations;
    world.triples.push_back({static_cast<TokenId>(s), static_cast<RelationId>(r), static_cast<TokenId>(o),
                             Source::structured});
  }
  return world;
}

Vocabulary synthetic_vocabulary(std::size_t n_tokens, std::size_t n_relations, std::span<Triple const> triples)
{
  std::vector<std::uint64_t> token_counts(n_tokens, 0);
  std::vector<std::uint64_t> relation_counts(n_relations, 0);
  for (auto const &t : triples)
  {
    ++token_counts.at(static_cast<std::size_t>(t.s));
    ++token_counts.at(static_cast<std::size_t>(t.o));
    ++relation_counts.at(static_cast<std::size_t>(t.r));
  }
  Vocabulary vocab;
  for (std::size_t t = 0; t < n_tokens; ++t)
  {
    vocab.add_token({0, "t" + std::to_string(t), TokenKind::concept_token, token_counts[t], 0});
  }
  for (std::size_t r = 0; r < n_relations; ++r)
  {
    vocab.add_relation({0, "r" + std::to_string(r), Source::structured, relation_counts[r]});
  }
  return vocab;
}

}  // namespace relfuse
