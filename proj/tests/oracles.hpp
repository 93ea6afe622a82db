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

// Reference computations used by the tests. Everything here is written with
// plain loops over the raw parameters so it shares no code path with the
// library beyond the Embedding layout.

#include "relfuse/model.hpp"
#include "relfuse/sampler.hpp"
#include "relfuse/train.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using relfuse::Embedding;
using relfuse::EnergyNormalizer;
using relfuse::Triple;

inline double plain_energy(Embedding const &theta, int s, int r, int o)
{
  auto const  d = static_cast<int>(theta.dim());
  auto const &G = theta.G[static_cast<std::size_t>(r)];
  std::vector<double> u(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i)
  {
    double acc = G(i, d);
    for (int j = 0; j < d; ++j)
    {
      acc += G(i, j) * theta.c(s, j);
    }
    u[static_cast<std::size_t>(i)] = acc;
  }
  double dot = 0.0;
  double nv  = 0.0;
  double nu  = 0.0;
  for (int i = 0; i < d; ++i)
  {
    dot += theta.v(o, i) * u[static_cast<std::size_t>(i)];
    nv += theta.v(o, i) * theta.v(o, i);
    nu += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
  }
  if (theta.normalizer == EnergyNormalizer::frobenius)
  {
    double ng = 0.0;
    for (int i = 0; i < d; ++i)
    {
      for (int j = 0; j <= d; ++j)
      {
        ng += G(i, j) * G(i, j);
      }
    }
    double nx = 1.0;
    for (int j = 0; j < d; ++j)
    {
      nx += theta.c(s, j) * theta.c(s, j);
    }
    return -dot / (std::sqrt(nv) * std::sqrt(ng) * std::sqrt(nx));
  }
  return -dot / (std::sqrt(nv) * std::sqrt(nu));
}

inline std::size_t joint_index(Embedding const &theta, int s, int r, int o)
{
  auto const W = theta.tokens();
  auto const R = theta.relations();
  return (static_cast<std::size_t>(s) * R + static_cast<std::size_t>(r)) * W + static_cast<std::size_t>(o);
}

inline Triple joint_triple(Embedding const &theta, std::size_t index)
{
  auto const W = theta.tokens();
  auto const R = theta.relations();
  auto const o = static_cast<int>(index % W);
  auto const r = static_cast<int>((index / W) % R);
  auto const s = static_cast<int>(index / (W * R));
  return {s, r, o, relfuse::Source::structured};
}

/// Exact Boltzmann joint over all W*R*W triples, indexed by joint_index.
inline std::vector<double> joint(Embedding const &theta)
{
  auto const          n = theta.tokens() * theta.relations() * theta.tokens();
  std::vector<double> p(n);
  double              z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    auto const t = joint_triple(theta, i);
    p[i]         = std::exp(-plain_energy(theta, t.s, t.r, t.o));
    z += p[i];
  }
  for (auto &x : p)
  {
    x /= z;
  }
  return p;
}

inline double log_partition(Embedding const &theta)
{
  double z = 0.0;
  for (std::size_t i = 0; i < theta.tokens() * theta.relations() * theta.tokens(); ++i)
  {
    auto const t = joint_triple(theta, i);
    z += std::exp(-plain_energy(theta, t.s, t.r, t.o));
  }
  return std::log(z);
}

/// P(free | fixed) as a ratio of joint probabilities.
inline std::vector<double> conditional_from_joint(Embedding const &theta, std::vector<double> const &p,
                                                  relfuse::ConditionalQuery const &q)
{
  auto const          n = relfuse::candidate_count(theta, q.slot);
  std::vector<double> out(n);
  double              marginal = 0.0;
  for (std::size_t k = 0; k < n; ++k)
  {
    auto const t = relfuse::complete(q, static_cast<std::int32_t>(k));
    out[k]       = p[joint_index(theta, t.s, t.r, t.o)];
    marginal += out[k];
  }
  for (auto &x : out)
  {
    x /= marginal;
  }
  return out;
}

/// Random parameters with entries N(0, 1), G included.
inline Embedding random_embedding(std::size_t W, std::size_t R, std::size_t d, std::uint64_t seed,
                                  EnergyNormalizer normalizer = EnergyNormalizer::object_norm)
{
  std::mt19937_64                  rng(seed);
  std::normal_distribution<double> normal;
  auto theta = Embedding::zeros(W, R, d, normalizer);
  for (Eigen::Index i = 0; i < theta.c.size(); ++i)
  {
    theta.c.data()[i] = normal(rng);
    theta.v.data()[i] = normal(rng);
  }
  for (auto &g : theta.G)
  {
    for (Eigen::Index i = 0; i < g.size(); ++i)
    {
      g.data()[i] = normal(rng);
    }
  }
  return theta;
}

/// Visits every scalar parameter as a mutable reference, in block order c, v, G.
inline void for_each_parameter(Embedding &theta, std::function<void(double &)> const &fn)
{
  for (Eigen::Index i = 0; i < theta.c.size(); ++i)
  {
    fn(theta.c.data()[i]);
  }
  for (Eigen::Index i = 0; i < theta.v.size(); ++i)
  {
    fn(theta.v.data()[i]);
  }
  for (auto &g : theta.G)
  {
    for (Eigen::Index i = 0; i < g.size(); ++i)
    {
      fn(g.data()[i]);
    }
  }
}

inline std::vector<double> flatten(relfuse::Gradient const &g)
{
  std::vector<double> out(g.c.data(), g.c.data() + g.c.size());
  out.insert(out.end(), g.v.data(), g.v.data() + g.v.size());
  for (auto const &m : g.G)
  {
    out.insert(out.end(), m.data(), m.data() + m.size());
  }
  return out;
}

/// Central differences of `objective` at every parameter.
inline std::vector<double> numeric_gradient(Embedding const &theta, std::function<double(Embedding const &)> const &objective,
                                            double h = 1e-6)
{
  Embedding           work = theta;
  std::vector<double> out;
  for_each_parameter(work, [&](double &x) {
    double const keep = x;
    x                 = keep + h;
    double const up   = objective(work);
    x                 = keep - h;
    double const down = objective(work);
    x                 = keep;
    out.push_back((up - down) / (2.0 * h));
  });
  return out;
}

/// The batch objective whose ascent direction batch_gradient returns.
inline double batch_objective(Embedding const &theta, std::vector<Triple> const &batch,
                              std::vector<Triple> const &negatives, relfuse::TrainConfig const &cfg)
{
  double pos = 0.0;
  double wsum = 0.0;
  for (auto const &t : batch)
  {
    double const w = t.source == relfuse::Source::co_occurrence ? cfg.offtask_prefactor : 1.0;
    pos += -w * plain_energy(theta, t.s, t.r, t.o);
    wsum += w;
  }
  double neg = 0.0;
  for (auto const &t : negatives)
  {
    neg += -plain_energy(theta, t.s, t.r, t.o);
  }
  double reg = 0.0;
  for (auto const &g : theta.G)
  {
    reg += g.squaredNorm();
  }
  return (wsum > 0.0 ? pos / wsum : 0.0) - neg / static_cast<double>(negatives.size()) - cfg.l2_G * reg;
}

/// Pearson chi-square goodness-of-fit p-value. Cells with tiny expectation
/// are pooled so the asymptotic distribution applies.
inline double chi_square_pvalue(std::vector<double> const &observed, std::vector<double> const &probs)
{
  double total = 0.0;
  for (double x : observed)
  {
    total += x;
  }
  double stat  = 0.0;
  int    cells = 0;
  double pool_obs = 0.0;
  double pool_exp = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
  {
    double const e = probs[i] * total;
    if (e < 5.0)
    {
      pool_obs += observed[i];
      pool_exp += e;
      continue;
    }
    stat += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (pool_exp > 0.0)
  {
    stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
    ++cells;
  }
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle
