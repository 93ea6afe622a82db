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

#include "relfuse/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace relfuse {
namespace {

std::string trim(std::string_view s)
{
  auto const first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
  {
    return {};
  }
  auto const last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_field(std::string const &field, std::string const &why)
{
  fail(ErrorKind::usage, "config field '" + field + "': " + why);
}

double parse_real(std::string const &field, std::string const &text)
{
  try
  {
    std::size_t used  = 0;
    double      value = std::stod(text, &used);
    if (used != text.size())
    {
      bad_field(field, "expected a number, got '" + text + "'");
    }
    return value;
  }
  catch (std::logic_error const &)
  {
    bad_field(field, "expected a number, got '" + text + "'");
  }
}

long long parse_integer(std::string const &field, std::string const &text)
{
  try
  {
    std::size_t used  = 0;
    long long   value = std::stoll(text, &used);
    if (used != text.size())
    {
      bad_field(field, "expected an integer, got '" + text + "'");
    }
    return value;
  }
  catch (std::logic_error const &)
  {
    bad_field(field, "expected an integer, got '" + text + "'");
  }
}

bool parse_bool(std::string const &field, std::string const &text)
{
  if (text == "true" || text == "1")
  {
    return true;
  }
  if (text == "false" || text == "0")
  {
    return false;
  }
  bad_field(field, "expected true or false, got '" + text + "'");
}

std::string format_real(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void check_finite(Matrix const &m, std::string const &block)
{
  if (!m.allFinite())
  {
    fail(ErrorKind::numerical, "non-finite gradient entries in parameter block " + block);
  }
}

void check_shapes(Embedding const &theta, Gradient const &g)
{
  bool ok = g.c.rows() == theta.c.rows() && g.c.cols() == theta.c.cols() && g.v.rows() == theta.v.rows() &&
            g.v.cols() == theta.v.cols() && g.G.size() == theta.G.size();
  for (std::size_t r = 0; ok && r < g.G.size(); ++r)
  {
    ok = g.G[r].rows() == theta.G[r].rows() && g.G[r].cols() == theta.G[r].cols();
  }
  if (!ok)
  {
    fail(ErrorKind::usage, "gradient shape does not match the embedding");
  }
}

}  // namespace

void TrainConfig::validate() const
{
  if (!(learning_rate > 0.0))
  {
    bad_field("learning_rate", "must be positive");
  }
  if (batch_size < 1)
  {
    bad_field("batch_size", "must be at least 1");
  }
  if (dim < 1)
  {
    bad_field("dim", "must be at least 1");
  }
  if (!(l2_G >= 0.0))
  {
    bad_field("l2_G", "must be non-negative");
  }
  if (gibbs.rounds < 1)
  {
    bad_field("gibbs_rounds", "must be at least 1");
  }
  if (gibbs.n_chains < 1)
  {
    bad_field("gibbs_chains", "must be at least 1");
  }
  if (!(offtask_prefactor >= 0.0))
  {
    bad_field("offtask_prefactor", "must be non-negative");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0))
  {
    bad_field("adam_beta1", "must lie in [0, 1)");
  }
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
  {
    bad_field("adam_beta2", "must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0))
  {
    bad_field("adam_epsilon", "must be positive");
  }
  if (patience < 1)
  {
    bad_field("patience", "must be at least 1");
  }
  if (max_epochs < 0)
  {
    bad_field("max_epochs", "must be non-negative");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
  {
    bad_field("validation_fraction", "must lie in (0, 1)");
  }
}

TrainConfig TrainConfig::parse(std::string const &text)
{
  TrainConfig        cfg;
  std::istringstream in(text);
  std::string        line;
  std::size_t        lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
    {
      line.erase(hash);
    }
    auto const body = trim(line);
    if (body.empty())
    {
      continue;
    }
    auto const eq = body.find('=');
    if (eq == std::string::npos)
    {
      fail(ErrorKind::usage, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    auto const key   = trim(std::string_view(body).substr(0, eq));
    auto const value = trim(std::string_view(body).substr(eq + 1));

    auto positive_size = [&](std::string const &field) {
      auto const n = parse_integer(field, value);
      if (n < 0)
      {
        bad_field(field, "must be non-negative");
      }
      return static_cast<std::size_t>(n);
    };

    if (key == "learning_rate")
      cfg.learning_rate = parse_real(key, value);
    else if (key == "batch_size")
      cfg.batch_size = positive_size(key);
    else if (key == "dim")
      cfg.dim = positive_size(key);
    else if (key == "l2_G")
      cfg.l2_G = parse_real(key, value);
    else if (key == "gibbs_rounds")
      cfg.gibbs.rounds = static_cast<int>(parse_integer(key, value));
    else if (key == "gibbs_chains")
      cfg.gibbs.n_chains = static_cast<int>(parse_integer(key, value));
    else if (key == "gibbs_use_intermediate")
      cfg.gibbs.use_intermediate = parse_bool(key, value);
    else if (key == "offtask_prefactor")
      cfg.offtask_prefactor = parse_real(key, value);
    else if (key == "adam_beta1")
      cfg.adam_beta1 = parse_real(key, value);
    else if (key == "adam_beta2")
      cfg.adam_beta2 = parse_real(key, value);
    else if (key == "adam_epsilon")
      cfg.adam_epsilon = parse_real(key, value);
    else if (key == "patience")
      cfg.patience = static_cast<int>(parse_integer(key, value));
    else if (key == "max_epochs")
      cfg.max_epochs = static_cast<int>(parse_integer(key, value));
    else if (key == "validation_fraction")
      cfg.validation_fraction = parse_real(key, value);
    else if (key == "seed")
      cfg.seed = static_cast<std::uint64_t>(positive_size(key));
    else if (key == "energy_normalizer")
    {
      try
      {
        cfg.normalizer = energy_normalizer_from_string(value);
      }
      catch (Error const &)
      {
        bad_field(key, "expected object_norm or frobenius, got '" + value + "'");
      }
    }
    else
      fail(ErrorKind::usage, "config line " + std::to_string(lineno) + ": unknown field '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
  {
    fail(ErrorKind::usage, "cannot open config file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string TrainConfig::to_text() const
{
  std::ostringstream out;
  out << "learning_rate = " << format_real(learning_rate) << '\n'
      << "batch_size = " << batch_size << '\n'
      << "dim = " << dim << '\n'
      << "l2_G = " << format_real(l2_G) << '\n'
      << "gibbs_rounds = " << gibbs.rounds << '\n'
      << "gibbs_chains = " << gibbs.n_chains << '\n'
      << "gibbs_use_intermediate = " << (gibbs.use_intermediate ? "true" : "false") << '\n'
      << "offtask_prefactor = " << format_real(offtask_prefactor) << '\n'
      << "adam_beta1 = " << format_real(adam_beta1) << '\n'
      << "adam_beta2 = " << format_real(adam_beta2) << '\n'
      << "adam_epsilon = " << format_real(adam_epsilon) << '\n'
      << "patience = " << patience << '\n'
      << "max_epochs = " << max_epochs << '\n'
      << "validation_fraction = " << format_real(validation_fraction) << '\n'
      << "seed = " << seed << '\n'
      << "energy_normalizer = " << to_string(normalizer) << '\n';
  return out.str();
}

Gradient Gradient::zeros_like(Embedding const &theta)
{
  Gradient g;
  g.c = Matrix::Zero(theta.c.rows(), theta.c.cols());
  g.v = Matrix::Zero(theta.v.rows(), theta.v.cols());
  g.G.reserve(theta.G.size());
  for (auto const &m : theta.G)
  {
    g.G.push_back(Matrix::Zero(m.rows(), m.cols()));
  }
  return g;
}

void Gradient::set_zero()
{
  c.setZero();
  v.setZero();
  for (auto &m : G)
  {
    m.setZero();
  }
}

AdamState AdamState::zeros_like(Embedding const &theta)
{
  return {Gradient::zeros_like(theta), Gradient::zeros_like(theta), 0};
}

void accumulate_neg_energy_gradient(Embedding const &theta, Triple const &t, double scale, Gradient &out)
{
  auto const  d = static_cast<Eigen::Index>(theta.dim());
  auto const &G = theta.G[static_cast<std::size_t>(t.r)];

  Vector x(d + 1);
  x.head(d) = theta.c.row(t.s).transpose();
  x[d]      = 1.0;
  Vector const u  = G * x;
  Vector const vo = theta.v.row(t.o).transpose();

  auto const nv = vo.norm();
  if (nv < kNormFloor)
  {
    fail(ErrorKind::numerical, "degenerate vector: object vector of token " + std::to_string(t.o) +
                                   " has norm below 1e-12");
  }

  auto &gG = out.G[static_cast<std::size_t>(t.r)];
  if (theta.normalizer == EnergyNormalizer::object_norm)
  {
    auto const nu = u.norm();
    if (nu < kNormFloor)
    {
      fail(ErrorKind::numerical, "degenerate vector: mapped subject of token " + std::to_string(t.s) +
                                     " under relation " + std::to_string(t.r) + " has norm below 1e-12");
    }
    auto const   denom = nv * nu;
    auto const   f     = vo.dot(u) / denom;
    Vector const dv    = u / denom - f * vo / (nv * nv);
    Vector const du    = vo / denom - f * u / (nu * nu);
    out.v.row(t.o) += scale * dv.transpose();
    gG.noalias() += scale * du * x.transpose();
    out.c.row(t.s) += scale * (G.leftCols(d).transpose() * du).transpose();
  }
  else
  {
    auto const ng = G.norm();
    auto const nx = x.norm();
    if (ng * nx < kNormFloor)
    {
      fail(ErrorKind::numerical, "degenerate vector: relation map " + std::to_string(t.r) +
                                     " has Frobenius norm below 1e-12");
    }
    auto const   denom = nv * ng * nx;
    auto const   f     = vo.dot(u) / denom;
    Vector const dv    = u / denom - f * vo / (nv * nv);
    Vector const dx    = G.transpose() * vo / denom - f * x / (nx * nx);
    out.v.row(t.o) += scale * dv.transpose();
    gG.noalias() += scale * (vo * x.transpose() / denom - f * G / (ng * ng));
    out.c.row(t.s) += scale * dx.head(d).transpose();
  }
}

Gradient batch_gradient(Embedding const &theta, std::span<Triple const> batch, std::span<Triple const> negatives,
                        TrainConfig const &cfg)
{
  if (batch.empty())
  {
    fail(ErrorKind::usage, "batch gradient needs a non-empty batch");
  }
  Gradient grad = Gradient::zeros_like(theta);
  auto     weight_of = [&](Triple const &t) { return t.source == Source::co_occurrence ? cfg.offtask_prefactor : 1.0; };
  double   total_weight = 0.0;
  for (auto const &t : batch)
  {
    total_weight += weight_of(t);
  }
  // Weighted mean, so a zero prefactor is the same as dropping those triples.
  if (total_weight > 0.0)
  {
    for (auto const &t : batch)
    {
      if (auto const w = weight_of(t); w != 0.0)
      {
        accumulate_neg_energy_gradient(theta, t, w / total_weight, grad);
      }
    }
  }
  // Separate buffer so identical phases cancel exactly.
  if (!negatives.empty())
  {
    Gradient   model = Gradient::zeros_like(theta);
    auto const neg   = 1.0 / static_cast<double>(negatives.size());
    for (auto const &t : negatives)
    {
      accumulate_neg_energy_gradient(theta, t, neg, model);
    }
    grad.c -= model.c;
    grad.v -= model.v;
    for (std::size_t r = 0; r < grad.G.size(); ++r)
    {
      grad.G[r] -= model.G[r];
    }
  }
  for (std::size_t r = 0; r < grad.G.size(); ++r)
  {
    grad.G[r] -= 2.0 * cfg.l2_G * theta.G[r];
  }

  check_finite(grad.c, "c");
  check_finite(grad.v, "v");
  for (std::size_t r = 0; r < grad.G.size(); ++r)
  {
    check_finite(grad.G[r], "G[" + std::to_string(r) + "]");
  }
  return grad;
}

void adam_update(Embedding &theta, Gradient const &grad, AdamState &state, TrainConfig const &cfg)
{
  check_shapes(theta, grad);
  check_shapes(theta, state.first);
  check_shapes(theta, state.second);

  ++state.step;
  auto const t     = static_cast<double>(state.step);
  auto const b1    = cfg.adam_beta1;
  auto const b2    = cfg.adam_beta2;
  auto const corr1 = 1.0 - std::pow(b1, t);
  auto const corr2 = 1.0 - std::pow(b2, t);

  auto step = [&](Matrix &param, Matrix const &g, Matrix &m, Matrix &s) {
    m = b1 * m + (1.0 - b1) * g;
    s = b2 * s + (1.0 - b2) * g.cwiseAbs2();
    param.array() += cfg.learning_rate * (m.array() / corr1) / ((s.array() / corr2).sqrt() + cfg.adam_epsilon);
  };

  step(theta.c, grad.c, state.first.c, state.second.c);
  step(theta.v, grad.v, state.first.v, state.second.v);
  for (std::size_t r = 0; r < theta.G.size(); ++r)
  {
    step(theta.G[r], grad.G[r], state.first.G[r], state.second.G[r]);
  }
}

double validation_metric(Embedding const &theta, std::span<Triple const> heldout)
{
  if (heldout.empty())
  {
    fail(ErrorKind::usage, "validation metric needs at least one held-out triple");
  }
  double total = 0.0;
  for (auto const &t : heldout)
  {
    if (t.r < 0 || static_cast<std::size_t>(t.r) >= theta.relations())
    {
      fail(ErrorKind::usage, "relation id " + std::to_string(t.r) + " out of range [0, " +
                                 std::to_string(theta.relations()) + ")");
    }
    auto const energies = candidate_energies(theta, {Slot::R, t.s, t.o});
    double     top      = -std::numeric_limits<double>::infinity();
    for (double e : energies)
    {
      top = std::max(top, -e);
    }
    double sum = 0.0;
    for (double e : energies)
    {
      sum += std::exp(-e - top);
    }
    total += -energies[static_cast<std::size_t>(t.r)] - top - std::log(sum);
  }
  return total / static_cast<double>(heldout.size());
}

Embedding initialize_embedding(std::size_t tokens, std::size_t relations, std::size_t dim,
                               EnergyNormalizer normalizer, std::uint64_t seed)
{
  Embedding  theta = Embedding::zeros(tokens, relations, dim, normalizer);
  Rng        rng(seed);
  auto const scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Eigen::Index i = 0; i < theta.c.size(); ++i)
  {
    theta.c.data()[i] = scale * standard_normal(rng);
  }
  for (Eigen::Index i = 0; i < theta.v.size(); ++i)
  {
    theta.v.data()[i] = scale * standard_normal(rng);
  }
  for (auto &G : theta.G)
  {
    for (Eigen::Index i = 0; i < G.rows(); ++i)
    {
      for (Eigen::Index j = 0; j < G.cols(); ++j)
      {
        G(i, j) = (i == j ? 1.0 : 0.0) + 0.01 * standard_normal(rng);
      }
    }
  }
  return theta;
}

FitResult fit(std::span<Triple const> pool, std::size_t tokens, std::size_t relations, TrainConfig const &cfg,
              EpochCallback on_epoch)
{
  cfg.validate();
  if (pool.size() <= cfg.batch_size)
  {
    fail(ErrorKind::usage, "training pool of " + std::to_string(pool.size()) +
                               " triples must be larger than batch_size " + std::to_string(cfg.batch_size));
  }
  for (auto const &t : pool)
  {
    if (t.s < 0 || t.o < 0 || t.r < 0 || static_cast<std::size_t>(t.s) >= tokens ||
        static_cast<std::size_t>(t.o) >= tokens || static_cast<std::size_t>(t.r) >= relations)
    {
      fail(ErrorKind::data, "training triple references an id outside the vocabulary");
    }
  }

  Rng rng(cfg.seed);

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto shuffle = [&](std::vector<std::size_t> &idx) {
    for (std::size_t i = idx.size(); i > 1; --i)
    {
      std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    }
  };
  shuffle(order);

  auto n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(pool.size())));
  n_val      = std::clamp<std::size_t>(n_val, 1, pool.size() - 1);
  std::vector<Triple> validation;
  std::vector<Triple> training;
  validation.reserve(n_val);
  training.reserve(pool.size() - n_val);
  for (std::size_t i = 0; i < order.size(); ++i)
  {
    (i < n_val ? validation : training).push_back(pool[order[i]]);
  }

  FitResult result;
  result.theta          = initialize_embedding(tokens, relations, cfg.dim, cfg.normalizer, cfg.seed);
  auto const chain_seed = rng();
  if (cfg.max_epochs == 0)
  {
    return result;
  }

  Embedding               theta = result.theta;
  AdamState               adam  = AdamState::zeros_like(theta);
  std::vector<ChainState> chains;

  auto const divergence_floor = -std::log(static_cast<double>(relations)) * 10.0;
  double     best             = -std::numeric_limits<double>::infinity();
  int        since_best       = 0;
  auto const start            = std::chrono::steady_clock::now();

  std::vector<std::size_t> batch_order(training.size());
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
  std::vector<Triple> batch;
  batch.reserve(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch)
  {
    shuffle(batch_order);
    for (std::size_t begin = 0; begin < batch_order.size(); begin += cfg.batch_size)
    {
      auto const end = std::min(begin + cfg.batch_size, batch_order.size());
      batch.clear();
      for (std::size_t i = begin; i < end; ++i)
      {
        batch.push_back(training[batch_order[i]]);
      }
      if (chains.empty())
      {
        chains = init_chains(batch, cfg.gibbs.n_chains, chain_seed);
      }
      auto const negatives = negative_samples(theta, chains, cfg.gibbs);
      auto const grad      = batch_gradient(theta, batch, negatives, cfg);
      adam_update(theta, grad, adam, cfg);
    }

    EpochRecord record;
    record.epoch             = epoch;
    record.validation_metric = validation_metric(theta, validation);
    record.wall_seconds      = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report.epochs.push_back(record);
    result.report.stopping_epoch = epoch;
    if (on_epoch)
    {
      on_epoch(record);
    }

    if (!std::isfinite(record.validation_metric) || record.validation_metric < divergence_floor)
    {
      fail(ErrorKind::numerical, "training diverged at epoch " + std::to_string(epoch) + ": validation metric " +
                                     format_real(record.validation_metric) + " is below " +
                                     format_real(divergence_floor));
    }

    if (record.validation_metric > best)
    {
      best                      = record.validation_metric;
      since_best                = 0;
      result.theta              = theta;
      result.report.best_epoch  = epoch;
      result.report.best_metric = best;
    }
    else if (++since_best >= cfg.patience)
    {
      break;
    }
  }
  return result;
}

}  // namespace relfuse
