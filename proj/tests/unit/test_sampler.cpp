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

#include "oracles.hpp"
#include "relfuse/sampler.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace relfuse;
using testing::capture_error;

namespace {

// Slot-R conditional at (0, ., 0) puts energy -1 on r0 and +1 on r1, r2.
Embedding peaked_world()
{
  auto theta = Embedding::zeros(2, 3, 1);
  theta.c << 1, 1;
  theta.v << 1, 1;
  theta.G[0] << 1, 0;
  theta.G[1] << -1, 0;
  theta.G[2] << -1, 0;
  return theta;
}

void check_frequencies_within_3_sigma(std::vector<double> const &counts, std::vector<double> const &probs, double n)
{
  for (std::size_t k = 0; k < probs.size(); ++k)
  {
    double const sigma = std::sqrt(n * probs[k] * (1.0 - probs[k]));
    INFO("candidate " << k << " observed " << counts[k] << " expected " << n * probs[k]);
    CHECK(std::abs(counts[k] - n * probs[k]) <= 3.0 * sigma + 1e-9);
  }
}

}  // namespace

TEST_CASE("uniform01 and uniform_index stay in range")
{
  Rng rng(1);
  for (int i = 0; i < 10000; ++i)
  {
    double const u = uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(uniform_index(rng, 7) < 7);
  }
}

TEST_CASE("sample_categorical follows the given probabilities")
{
  std::vector<double> const probs{0.5, 0.0, 0.2, 0.3};
  std::vector<double>       counts(4, 0.0);
  Rng                       rng(5);
  int const                 n = 20000;
  for (int i = 0; i < n; ++i)
  {
    counts[sample_categorical(probs, rng)] += 1.0;
  }
  CHECK(counts[1] == 0.0);
  check_frequencies_within_3_sigma(counts, probs, n);
}

TEST_CASE("resample_slot draws from the slot conditional")
{
  auto const theta = peaked_world();
  auto const probs = conditional_distribution(theta, {Slot::R, 0, 0});
  double const e2  = std::exp(2.0);
  CHECK(probs[0] == doctest::Approx(e2 / (e2 + 2.0)));

  ChainState          state{{0, 1, 0, Source::structured}, Rng(9)};
  std::vector<double> counts(3, 0.0);
  int const           n = 10000;
  for (int i = 0; i < n; ++i)
  {
    resample_slot(theta, state, Slot::R);
    CHECK(state.current.s == 0);
    CHECK(state.current.o == 0);
    counts[static_cast<std::size_t>(state.current.r)] += 1.0;
  }
  check_frequencies_within_3_sigma(counts, probs, n);
}

TEST_CASE("uniform conditional gives uniform frequencies")
{
  auto theta = Embedding::zeros(5, 1, 2);
  theta.c.setOnes();
  theta.G[0] << 1, 0, 0, 0, 0, 0;
  theta.v.col(1).setOnes();  // orthogonal to every G c
  ChainState          state{{2, 0, 3, Source::structured}, Rng(4)};
  std::vector<double> counts(5, 0.0);
  int const           n = 10000;
  for (int i = 0; i < n; ++i)
  {
    resample_slot(theta, state, Slot::O);
    counts[static_cast<std::size_t>(state.current.o)] += 1.0;
  }
  check_frequencies_within_3_sigma(counts, std::vector<double>(5, 0.2), n);
}

TEST_CASE("a fixed seed gives a fixed successor")
{
  auto const theta = oracle::random_embedding(6, 3, 2, 8);
  ChainState a{{1, 2, 3, Source::structured}, Rng(77)};
  ChainState b = a;
  for (int i = 0; i < 50; ++i)
  {
    gibbs_sweep(theta, a);
    gibbs_sweep(theta, b);
    CHECK(a.current == b.current);
  }
}

TEST_CASE("sweep occupancy on a W=2, R=1 world matches the joint")
{
  auto const theta = oracle::random_embedding(2, 1, 2, 31);
  auto const p     = oracle::joint(theta);
  ChainState state{{0, 0, 0, Source::structured}, Rng(2)};
  std::vector<double> counts(p.size(), 0.0);
  for (int i = 0; i < 100000; ++i)
  {
    gibbs_sweep(theta, state);
    counts[oracle::joint_index(theta, state.current.s, state.current.r, state.current.o)] += 1.0;
  }
  double const pvalue = oracle::chi_square_pvalue(counts, p);
  INFO("p-value " << pvalue);
  CHECK(pvalue > 0.01);
}

TEST_CASE("a single-token single-relation chain never moves")
{
  auto theta = Embedding::zeros(1, 1, 2);
  theta.c << 0.3, 0.4;
  theta.v << 1.0, 0.0;
  theta.G[0] << 1, 0, 0, 0, 1, 0;
  ChainState state{{0, 0, 0, Source::structured}, Rng(3)};
  for (int i = 0; i < 100; ++i)
  {
    gibbs_sweep(theta, state);
    CHECK(state.current == Triple{0, 0, 0, Source::structured});
  }
}

TEST_CASE("sweeps leave the parameters untouched")
{
  auto const theta = oracle::random_embedding(4, 2, 3, 12);
  auto const copy  = theta;
  ChainState state{{0, 1, 2, Source::structured}, Rng(3)};
  for (int i = 0; i < 20; ++i)
  {
    gibbs_sweep(theta, state);
  }
  CHECK(theta.c == copy.c);
  CHECK(theta.v == copy.v);
  CHECK(theta.G[0] == copy.G[0]);
  CHECK(theta.G[1] == copy.G[1]);
}

TEST_CASE("negative_samples advances persistent chains")
{
  auto const                theta = oracle::random_embedding(5, 2, 3, 14);
  std::vector<Triple> const batch{{1, 0, 2, Source::structured}, {3, 1, 4, Source::structured}};
  auto                      chains = init_chains(batch, 1, 99);
  CHECK((chains[0].current == batch[0] || chains[0].current == batch[1]));

  // Replay by hand: the second call must continue from where the first ended.
  ChainState replay = chains[0];
  GibbsConfig const cfg{};
  auto const first  = negative_samples(theta, chains, cfg);
  auto const second = negative_samples(theta, chains, cfg);
  REQUIRE(first.size() == 1);
  REQUIRE(second.size() == 1);
  for (int i = 0; i < 3; ++i)
  {
    gibbs_sweep(theta, replay);
  }
  CHECK(first[0] == replay.current);
  for (int i = 0; i < 3; ++i)
  {
    gibbs_sweep(theta, replay);
  }
  CHECK(second[0] == replay.current);
  CHECK(chains[0].current == replay.current);

  GibbsConfig intermediate;
  intermediate.use_intermediate = true;
  CHECK(negative_samples(theta, chains, intermediate).size() == 3);

  auto many = init_chains(batch, 4, 1);
  CHECK(negative_samples(theta, many, cfg).size() == 4);
}

TEST_CASE("negative samples from frozen parameters follow the joint")
{
  auto const                theta = oracle::random_embedding(3, 2, 2, 55);
  auto const                p     = oracle::joint(theta);
  std::vector<Triple> const batch{{0, 0, 0, Source::structured}};
  auto                      chains = init_chains(batch, 1, 5);
  std::vector<double>       counts(p.size(), 0.0);
  for (int i = 0; i < 40000; ++i)
  {
    for (auto const &t : negative_samples(theta, chains, GibbsConfig{}))
    {
      counts[oracle::joint_index(theta, t.s, t.r, t.o)] += 1.0;
    }
  }
  double const pvalue = oracle::chi_square_pvalue(counts, p);
  INFO("p-value " << pvalue);
  CHECK(pvalue > 0.01);
}

TEST_CASE("gibbs configuration is validated")
{
  GibbsConfig cfg;
  cfg.rounds = 0;
  CHECK(capture_error([&] { cfg.validate(); }).first == ErrorKind::usage);
  cfg.rounds   = 1;
  cfg.n_chains = 0;
  CHECK(capture_error([&] { cfg.validate(); }).first == ErrorKind::usage);
  CHECK(capture_error([] { init_chains({}, 1, 0); }).first == ErrorKind::usage);
}
