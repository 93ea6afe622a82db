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

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

namespace relfuse {
namespace {

constexpr char        kMagic[]       = "RELFUSE1";
constexpr std::size_t kMagicSize     = 8;
constexpr int         kFormatVersion = 1;

void check_token(Embedding const &theta, std::int32_t id, char const *role)
{
  if (id < 0 || static_cast<std::size_t>(id) >= theta.tokens())
  {
    fail(ErrorKind::usage, std::string(role) + " id " + std::to_string(id) + " out of range [0, " +
                               std::to_string(theta.tokens()) + ")");
  }
}

void check_relation(Embedding const &theta, std::int32_t id)
{
  if (id < 0 || static_cast<std::size_t>(id) >= theta.relations())
  {
    fail(ErrorKind::usage, "relation id " + std::to_string(id) + " out of range [0, " +
                               std::to_string(theta.relations()) + ")");
  }
}

[[noreturn]] void degenerate(std::string const &what)
{
  fail(ErrorKind::numerical, "degenerate vector: " + what + " has norm below 1e-12");
}

// Norm of the second factor in the denominator for subject s under relation r.
double mapped_norm(Embedding const &theta, Vector const &mapped, RelationId r, TokenId s)
{
  if (theta.normalizer == EnergyNormalizer::object_norm)
  {
    return mapped.norm();
  }
  auto const xnorm = std::sqrt(theta.c.row(s).squaredNorm() + 1.0);
  return theta.G[static_cast<std::size_t>(r)].norm() * xnorm;
}

Vector map_subject(Embedding const &theta, TokenId s, RelationId r)
{
  auto const &G = theta.G[static_cast<std::size_t>(r)];
  auto const  d = static_cast<Eigen::Index>(theta.dim());
  return G.leftCols(d) * theta.c.row(s).transpose() + G.col(d);
}

void write_le(std::ostream &out, double value, bool single)
{
  if (single)
  {
    auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
    if constexpr (std::endian::native == std::endian::big)
    {
      bits = __builtin_bswap32(bits);
    }
    out.write(reinterpret_cast<char const *>(&bits), sizeof(bits));
  }
  else
  {
    auto bits = std::bit_cast<std::uint64_t>(value);
    if constexpr (std::endian::native == std::endian::big)
    {
      bits = __builtin_bswap64(bits);
    }
    out.write(reinterpret_cast<char const *>(&bits), sizeof(bits));
  }
}

void write_block(std::ostream &out, Matrix const &m, bool single)
{
  for (Eigen::Index i = 0; i < m.size(); ++i)
  {
    write_le(out, m.data()[i], single);
  }
}

void read_block(std::istream &in, Matrix &m, bool single, char const *name)
{
  std::size_t const width = single ? 4 : 8;
  std::vector<char> raw(static_cast<std::size_t>(m.size()) * width);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  auto const got = static_cast<std::size_t>(in.gcount());
  if (got != raw.size())
  {
    fail(ErrorKind::data, std::string("truncated model file: block ") + name + " expects " +
                              std::to_string(m.size()) + " values, found " + std::to_string(got / width));
  }
  for (Eigen::Index i = 0; i < m.size(); ++i)
  {
    char const *p = raw.data() + static_cast<std::size_t>(i) * width;
    if (single)
    {
      std::uint32_t bits;
      std::memcpy(&bits, p, 4);
      if constexpr (std::endian::native == std::endian::big)
      {
        bits = __builtin_bswap32(bits);
      }
      m.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    else
    {
      std::uint64_t bits;
      std::memcpy(&bits, p, 8);
      if constexpr (std::endian::native == std::endian::big)
      {
        bits = __builtin_bswap64(bits);
      }
      m.data()[i] = std::bit_cast<double>(bits);
    }
  }
}

}  // namespace

std::string_view to_string(EnergyNormalizer n)
{
  return n == EnergyNormalizer::object_norm ? "object_norm" : "frobenius";
}

EnergyNormalizer energy_normalizer_from_string(std::string_view text)
{
  if (text == "object_norm")
  {
    return EnergyNormalizer::object_norm;
  }
  if (text == "frobenius")
  {
    return EnergyNormalizer::frobenius;
  }
  fail(ErrorKind::usage, "unknown energy normalizer '" + std::string(text) + "'");
}

Embedding Embedding::zeros(std::size_t tokens, std::size_t relations, std::size_t dim, EnergyNormalizer normalizer)
{
  auto const w = static_cast<Eigen::Index>(tokens);
  auto const d = static_cast<Eigen::Index>(dim);
  Embedding  theta;
  theta.c = Matrix::Zero(w, d);
  theta.v = Matrix::Zero(w, d);
  theta.G.assign(relations, Matrix::Zero(d, d + 1));
  theta.normalizer = normalizer;
  return theta;
}

void Embedding::validate() const
{
  if (c.rows() < 1 || relations() < 1 || c.cols() < 1)
  {
    fail(ErrorKind::usage, "embedding needs at least one token, one relation and one dimension");
  }
  if (v.rows() != c.rows() || v.cols() != c.cols())
  {
    fail(ErrorKind::usage, "object vectors do not match subject vector shape");
  }
  for (std::size_t r = 0; r < G.size(); ++r)
  {
    if (G[r].rows() != c.cols() || G[r].cols() != c.cols() + 1)
    {
      fail(ErrorKind::usage, "relation map " + std::to_string(r) + " is not d x (d+1)");
    }
    if (!G[r].allFinite())
    {
      fail(ErrorKind::numerical, "relation map " + std::to_string(r) + " has non-finite entries");
    }
  }
  if (!c.allFinite())
  {
    fail(ErrorKind::numerical, "subject vectors have non-finite entries");
  }
  if (!v.allFinite())
  {
    fail(ErrorKind::numerical, "object vectors have non-finite entries");
  }
}

Triple complete(ConditionalQuery const &q, std::int32_t candidate)
{
  switch (q.slot)
  {
  case Slot::S:
    return {candidate, q.fixed_a, q.fixed_b, Source::structured};
  case Slot::R:
    return {q.fixed_a, candidate, q.fixed_b, Source::structured};
  case Slot::O:
    return {q.fixed_a, q.fixed_b, candidate, Source::structured};
  }
  return {};
}

std::size_t candidate_count(Embedding const &theta, Slot slot)
{
  return slot == Slot::R ? theta.relations() : theta.tokens();
}

double energy(Embedding const &theta, TokenId s, RelationId r, TokenId o)
{
  check_token(theta, s, "subject");
  check_relation(theta, r);
  check_token(theta, o, "object");

  auto const vo    = theta.v.row(o);
  auto const vnorm = vo.norm();
  if (vnorm < kNormFloor)
  {
    degenerate("object vector of token " + std::to_string(o));
  }
  Vector const mapped = map_subject(theta, s, r);
  auto const   unorm  = mapped_norm(theta, mapped, r, s);
  if (unorm < kNormFloor)
  {
    degenerate("mapped subject of token " + std::to_string(s) + " under relation " + std::to_string(r));
  }
  return -vo.dot(mapped) / (vnorm * unorm);
}

std::vector<double> candidate_energies(Embedding const &theta, ConditionalQuery const &q)
{
  std::vector<double> out;
  switch (q.slot)
  {
  case Slot::R: {
    check_token(theta, q.fixed_a, "subject");
    check_token(theta, q.fixed_b, "object");
    out.reserve(theta.relations());
    for (std::size_t r = 0; r < theta.relations(); ++r)
    {
      out.push_back(energy(theta, q.fixed_a, static_cast<RelationId>(r), q.fixed_b));
    }
    break;
  }
  case Slot::O: {
    check_token(theta, q.fixed_a, "subject");
    check_relation(theta, q.fixed_b);
    Vector const mapped = map_subject(theta, q.fixed_a, q.fixed_b);
    auto const   unorm  = mapped_norm(theta, mapped, q.fixed_b, q.fixed_a);
    if (unorm < kNormFloor)
    {
      degenerate("mapped subject of token " + std::to_string(q.fixed_a) + " under relation " +
                 std::to_string(q.fixed_b));
    }
    Vector const dots  = theta.v * mapped;
    Vector const norms = theta.v.rowwise().norm();
    out.resize(theta.tokens());
    for (std::size_t o = 0; o < theta.tokens(); ++o)
    {
      auto const i = static_cast<Eigen::Index>(o);
      if (norms[i] < kNormFloor)
      {
        degenerate("object vector of token " + std::to_string(o));
      }
      out[o] = -dots[i] / (norms[i] * unorm);
    }
    break;
  }
  case Slot::S: {
    check_relation(theta, q.fixed_a);
    check_token(theta, q.fixed_b, "object");
    auto const &G     = theta.G[static_cast<std::size_t>(q.fixed_a)];
    auto const  d     = static_cast<Eigen::Index>(theta.dim());
    auto const  vo    = theta.v.row(q.fixed_b);
    auto const  vnorm = vo.norm();
    if (vnorm < kNormFloor)
    {
      degenerate("object vector of token " + std::to_string(q.fixed_b));
    }
    Matrix mapped = theta.c * G.leftCols(d).transpose();
    mapped.rowwise() += G.col(d).transpose();
    Vector const dots = mapped * vo.transpose();
    Vector       norms;
    if (theta.normalizer == EnergyNormalizer::object_norm)
    {
      norms = mapped.rowwise().norm();
    }
    else
    {
      norms = ((theta.c.rowwise().squaredNorm().array() + 1.0).sqrt() * G.norm()).matrix();
    }
    out.resize(theta.tokens());
    for (std::size_t s = 0; s < theta.tokens(); ++s)
    {
      auto const i = static_cast<Eigen::Index>(s);
      if (norms[i] < kNormFloor)
      {
        degenerate("mapped subject of token " + std::to_string(s) + " under relation " + std::to_string(q.fixed_a));
      }
      out[s] = -dots[i] / (vnorm * norms[i]);
    }
    break;
  }
  }
  return out;
}

double exact_log_partition(Embedding const &theta)
{
  auto const w     = static_cast<double>(theta.tokens());
  auto const total = w * w * static_cast<double>(theta.relations());
  if (total > kEnumerationLimit)
  {
    fail(ErrorKind::usage, "exact partition function refused: W^2 R = " + std::to_string(total) +
                               " exceeds the enumeration limit of 1e7 triples");
  }
  // Streaming log-sum-exp over the object-slot blocks.
  double running_max = -std::numeric_limits<double>::infinity();
  double running_sum = 0.0;
  for (std::size_t s = 0; s < theta.tokens(); ++s)
  {
    for (std::size_t r = 0; r < theta.relations(); ++r)
    {
      auto const energies = candidate_energies(
          theta, {Slot::O, static_cast<std::int32_t>(s), static_cast<std::int32_t>(r)});
      double block_max = -std::numeric_limits<double>::infinity();
      for (double e : energies)
      {
        block_max = std::max(block_max, -e);
      }
      if (block_max > running_max)
      {
        running_sum *= std::exp(running_max - block_max);
        running_max = block_max;
      }
      for (double e : energies)
      {
        running_sum += std::exp(-e - running_max);
      }
    }
  }
  return running_max + std::log(running_sum);
}

std::vector<double> boltzmann_weights(std::span<double const> energies)
{
  std::vector<double> probs(energies.begin(), energies.end());
  double              top = -std::numeric_limits<double>::infinity();
  for (double e : probs)
  {
    top = std::max(top, -e);
  }
  double sum = 0.0;
  for (double &p : probs)
  {
    p = std::exp(-p - top);
    sum += p;
  }
  for (double &p : probs)
  {
    p /= sum;
  }
  return probs;
}

std::vector<std::int32_t> rank_by_energy(std::span<double const> energies)
{
  std::vector<std::int32_t> order(energies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    return energies[static_cast<std::size_t>(a)] < energies[static_cast<std::size_t>(b)];
  });
  return order;
}

std::vector<double> conditional_distribution(Embedding const &theta, ConditionalQuery const &q)
{
  return boltzmann_weights(candidate_energies(theta, q));
}

std::vector<std::int32_t> rank_completions(Embedding const &theta, ConditionalQuery const &q)
{
  return rank_by_energy(candidate_energies(theta, q));
}

void save_model(Embedding const &theta, std::string const &path, SaveOptions options)
{
  theta.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    fail(ErrorKind::data, "cannot write model file '" + path + "'");
  }
  nlohmann::ordered_json header;
  header["format_version"]   = kFormatVersion;
  header["dim"]              = theta.dim();
  header["W"]                = theta.tokens();
  header["R"]                = theta.relations();
  header["energy_normalizer"] = to_string(theta.normalizer);
  header["vocab_hash"]       = theta.vocab_hash;
  header["dtype"]            = options.single_precision ? "f32" : "f64";

  out.write(kMagic, kMagicSize);
  auto const text = header.dump();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.put('\n');
  write_block(out, theta.c, options.single_precision);
  write_block(out, theta.v, options.single_precision);
  for (auto const &G : theta.G)
  {
    write_block(out, G, options.single_precision);
  }
  if (!out)
  {
    fail(ErrorKind::data, "failed writing model file '" + path + "'");
  }
}

Embedding load_model(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    fail(ErrorKind::data, "cannot open model file '" + path + "'");
  }
  char magic[kMagicSize];
  in.read(magic, kMagicSize);
  if (in.gcount() != static_cast<std::streamsize>(kMagicSize) || std::memcmp(magic, kMagic, kMagicSize) != 0)
  {
    fail(ErrorKind::data, "'" + path + "' is not a model file (bad magic bytes)");
  }
  std::string header_text;
  if (!std::getline(in, header_text))
  {
    fail(ErrorKind::data, "truncated model file: missing header");
  }
  nlohmann::json header;
  try
  {
    header = nlohmann::json::parse(header_text);
  }
  catch (nlohmann::json::exception const &e)
  {
    fail(ErrorKind::data, std::string("malformed model header: ") + e.what());
  }

  Embedding theta;
  bool      single = false;
  try
  {
    auto const version = header.at("format_version").get<int>();
    if (version != kFormatVersion)
    {
      fail(ErrorKind::data, "unsupported model format version " + std::to_string(version) + " (expected " +
                                std::to_string(kFormatVersion) + ")");
    }
    auto const dtype = header.at("dtype").get<std::string>();
    if (dtype != "f64" && dtype != "f32")
    {
      fail(ErrorKind::data, "unsupported model dtype '" + dtype + "'");
    }
    single            = dtype == "f32";
    auto const d      = header.at("dim").get<std::size_t>();
    auto const w      = header.at("W").get<std::size_t>();
    auto const r      = header.at("R").get<std::size_t>();
    if (d == 0 || w == 0 || r == 0)
    {
      fail(ErrorKind::data, "model header has a zero dimension");
    }
    theta = Embedding::zeros(w, r, d, energy_normalizer_from_string(header.at("energy_normalizer").get<std::string>()));
    theta.vocab_hash = header.at("vocab_hash").get<std::string>();
  }
  catch (nlohmann::json::exception const &e)
  {
    fail(ErrorKind::data, std::string("malformed model header: ") + e.what());
  }
  catch (Error const &e)
  {
    fail(ErrorKind::data, e.what());
  }

  read_block(in, theta.c, single, "c");
  read_block(in, theta.v, single, "v");
  for (auto &G : theta.G)
  {
    read_block(in, G, single, "G");
  }
  if (in.peek() != std::char_traits<char>::eof())
  {
    fail(ErrorKind::data, "model file has data beyond the dimensions in its header");
  }
  theta.validate();
  return theta;
}

}  // namespace relfuse
