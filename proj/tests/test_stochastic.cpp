// Copyright 2026 The schro Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "schro/stochastic.hpp"

namespace {

using namespace schro;
using schro::testing::generic_basis;

class StochasticTest : public ::testing::Test {
 protected:
  SpectralBasis basis = generic_basis();
  PropagatorTables tables{basis, 1e-2};
  RandomAmplitudeModel model = RandomAmplitudeModel::power_law(16, 20.0, 2.0);
};

TEST_F(StochasticTest, EtaIsDeterministicPerSeed) {
  Rng a(17), b(17), c(18);
  const auto x = sample_eta(model, 1e-2, a);
  EXPECT_EQ(x.values, sample_eta(model, 1e-2, b).values);
  EXPECT_NE(x.values, sample_eta(model, 1e-2, c).values);
  EXPECT_EQ(x.steps(), 100u);
}

TEST_F(StochasticTest, EtaEnergyMatchesCoefficients) {
  for (auto family : {NoiseFamily::gaussian, NoiseFamily::logistic}) {
    auto m = model;
    m.noise = family;
    Rng rng(2024);
    constexpr int kDraws = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < kDraws; ++k) {
      const double e = std::pow(l2_norm(sample_eta(m, 1e-2, rng)), 2);
      sum += e;
      sum2 += e * e;
    }
    const double mean = sum / kDraws;
    const double se = std::sqrt((sum2 / kDraws - mean * mean) / kDraws);
    EXPECT_NEAR(mean, m.energy(), 3.0 * se) << to_string(family);
  }
}

TEST_F(StochasticTest, SingleConstantMode) {
  RandomAmplitudeModel m;
  m.b = {1.0, 0.0, 0.0};
  Rng rng(3);
  const auto eta = sample_eta(m, 1e-2, rng);
  for (double v : eta.values) EXPECT_EQ(v, eta.values.front());
}

TEST_F(StochasticTest, ModelGuards) {
  RandomAmplitudeModel m;
  Rng rng(1);
  EXPECT_THROW(sample_eta(m, 1e-2, rng), InputError);
  m.b = {1.0, -1.0};
  EXPECT_THROW(sample_eta(m, 1e-2, rng), InputError);
  EXPECT_THROW(sample_eta(model, 0.3, rng), InputError);
  EXPECT_THROW(parse_noise_family("cauchy"), InputError);
}

TEST_F(StochasticTest, ChainIsUnitaryAndComposes) {
  Rng rng(9);
  ChainOptions opts;
  opts.keep_states = opts.keep_etas = true;
  const auto z0 = QuantumState::eigenstate(8, 1);
  const auto chain = simulate_chain(z0, model, 20, basis, tables, rng, 1.0, opts);
  ASSERT_EQ(chain.states.size(), 21u);
  ASSERT_EQ(chain.etas.size(), 20u);
  for (double n : chain.norm_l2) EXPECT_NEAR(n, 1.0, 1e-10);
  for (int k = 0; k < 20; ++k)
    EXPECT_LE(distance(chain.states[k + 1], propagate(chain.states[k], chain.etas[k], tables)), 1e-15);
}

TEST_F(StochasticTest, ZeroNoiseKeepsNorms) {
  RandomAmplitudeModel quiet;
  quiet.b.assign(16, 0.0);
  Rng rng(2), rng2(2);
  const auto z0 = QuantumState::random(8, rng);
  const auto chain = simulate_chain(z0, quiet, 10, basis, tables, rng2, 1.0);
  for (std::size_t k = 0; k < chain.norm_pos.size(); ++k) {
    EXPECT_NEAR(chain.norm_pos[k], chain.norm_pos[0], 1e-10);
    EXPECT_NEAR(chain.norm_neg[k], chain.norm_neg[0], 1e-12);
  }
  const auto g = growth_report(z0, quiet, 20, 1.0, 3, 5, basis, tables);
  for (double x : g.median_G) EXPECT_NEAR(x, g.median_G.front(), 1e-10);
}

TEST_F(StochasticTest, EntranceAtTimeZero) {
  StoppingConfig stop;
  stop.radius = 1.0;  // ||e_1||_{-1} = 1/mu_1 < 1
  Rng rng(1);
  const auto t = first_entrance_time(QuantumState::eigenstate(8, 1), model, stop, basis, tables, rng);
  EXPECT_EQ(t.steps, 0);
  EXPECT_FALSE(t.censored);

  stop.radius = 1e-9;
  stop.max_steps = 5;
  const auto c = first_entrance_time(QuantumState::eigenstate(8, 1), model, stop, basis, tables, rng);
  EXPECT_TRUE(c.censored);
  EXPECT_EQ(c.steps, 5);
}

TEST_F(StochasticTest, TailStatistics) {
  StoppingConfig stop;
  stop.radius = 0.5 * sobolev_norm(QuantumState::eigenstate(8, 1), -1.0, basis);
  stop.max_steps = 100;
  const auto z0 = QuantumState::eigenstate(8, 1);
  const auto r = tail_statistics(z0, model, stop, 10, 10, 60, 11, basis, tables);
  EXPECT_EQ(r.finite + r.censored, r.paths);
  EXPECT_EQ(r.paths, 60);
  ASSERT_EQ(r.tail.size(), 11u);
  EXPECT_EQ(r.tail.front().p_hat, 1.0);  // tau >= 1 since z0 is outside the ball
  for (std::size_t n = 1; n < r.tail.size(); ++n) EXPECT_LE(r.tail[n].p_hat, r.tail[n - 1].p_hat);

  const auto again = tail_statistics(z0, model, stop, 10, 10, 60, 11, basis, tables);
  EXPECT_EQ(r.entrance_times, again.entrance_times);

  EXPECT_THROW(tail_statistics(z0, model, stop, 10, 10, 49, 11, basis, tables), InputError);
  EXPECT_THROW(tail_statistics(z0, model, stop, 20, 10, 60, 11, basis, tables), InputError);
}

TEST_F(StochasticTest, DegenerateTail) {
  StoppingConfig stop;
  stop.radius = 1e-9;
  stop.max_steps = 5;
  const auto r = tail_statistics(QuantumState::eigenstate(8, 1), model, stop, 5, 1, 50, 1, basis, tables);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.censored, 50);
}

TEST_F(StochasticTest, GrowthRunningExtremaMonotone) {
  const auto g = growth_report(QuantumState::eigenstate(8, 1), model, 30, 2.0, 8, 77, basis, tables);
  ASSERT_EQ(g.checkpoints, (std::vector<int>{3, 15, 30}));
  for (int i = 0; i < 8; ++i)
    for (std::size_t k = 1; k < g.running_max[i].size(); ++k) {
      EXPECT_GE(g.running_max[i][k], g.running_max[i][k - 1]);
      EXPECT_LE(g.running_min[i][k], g.running_min[i][k - 1]);
    }
  for (std::size_t k = 1; k < 3; ++k) {
    EXPECT_GE(g.median_G[k], g.median_G[k - 1]);
    EXPECT_LE(g.median_L[k], g.median_L[k - 1]);
  }
}

TEST_F(StochasticTest, SupportProbe) {
  const auto zero = ControlSignal::zero(1e-2, 100);
  EXPECT_EQ(support_probe(model, zero, 1e6, 200, 1), 1.0);
  const auto far = ControlSignal::sample(1e-2, 100, [](double) { return 1e4; });
  EXPECT_EQ(support_probe(model, far, 1.0, 200, 1), 0.0);
  const double p = support_probe(model, zero, std::sqrt(model.energy()), 2000, 1);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

}  // namespace
