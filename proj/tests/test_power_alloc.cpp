#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aam/power_alloc.hpp"

using namespace aam;

namespace {

// Golden-section maximization of a unimodal function on [a, b].
template <typename F>
double golden_max(F f, double a, double b, int iters = 200) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

EffectiveGains random_gains(int slots, int evtols, std::mt19937_64& rng, bool row_constant) {
  EffectiveGains g = EffectiveGains::zeros(slots, evtols);
  std::uniform_real_distribution<double> dist(1e-8, 5e-7);
  for (int n = 0; n < slots; ++n) {
    if (row_constant) {
      // One gain per transmitter, every receiver sees the same value.
      for (int tx = 0; tx < evtols; ++tx) {
        const double q = dist(rng);
        for (int rx = 0; rx < evtols; ++rx) g.at(n, rx, tx) = q;
      }
    } else {
      // One gain per receiver, scalar-channel shape.
      for (int rx = 0; rx < evtols; ++rx) {
        const double q = dist(rng);
        for (int tx = 0; tx < evtols; ++tx) g.at(n, rx, tx) = q;
      }
    }
  }
  return g;
}

}  // namespace

TEST_CASE("mu update: closed form and stationarity") {
  // Scalar instance with unit multiplier and unit gain-power product 4.
  EffectiveGains g = EffectiveGains::zeros(1, 1);
  g.at(0, 0, 0) = 4.0;
  PowerSchedule p = PowerSchedule::uniform(1, 1, 1.0);
  MatrixXd y = MatrixXd::Ones(1, 1);
  const MatrixXd mu = update_mu(g, p, y);
  CHECK(std::abs(mu(0, 0) - (2.0 + 2.0 * std::sqrt(2.0))) < 1e-12);

  // Zero power pins the multiplier at zero.
  p.at(0, 0) = 0.0;
  CHECK(update_mu(g, p, y)(0, 0) == 0.0);

  // Random instances: derivative of the dual surrogate in mu vanishes, and a
  // golden-section search lands on the same point.
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> qd(0.1, 8.0), pd(0.05, 3.0), yd(0.1, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    const double q = qd(rng), pw = pd(rng), yy = yd(rng);
    g.at(0, 0, 0) = q;
    p.at(0, 0) = pw;
    y(0, 0) = yy;
    const double m = update_mu(g, p, y)(0, 0);
    const double deriv = 1.0 / (1.0 + m) - 1.0 + yy * std::sqrt(q * pw) / std::sqrt(1.0 + m);
    CHECK(std::abs(deriv) < 1e-9);
    const auto f = [&](double u) { return std::log1p(u) - u + 2.0 * yy * std::sqrt((1.0 + u) * q * pw); };
    const double m_gold = golden_max(f, 0.0, 4.0 * m + 10.0);
    CHECK(std::abs(m - m_gold) < 1e-6 * (1.0 + m));
  }
}

TEST_CASE("y update: closed form and golden-section cross-check") {
  EffectiveGains g = EffectiveGains::zeros(1, 1);
  g.at(0, 0, 0) = 3.0;
  PowerSchedule p = PowerSchedule::uniform(1, 1, 2.0);
  MatrixXd mu = MatrixXd::Constant(1, 1, 1.5);
  const double noise = 0.25;
  const MatrixXd y = update_y(g, p, mu, noise);
  CHECK(std::abs(y(0, 0) - std::sqrt(2.5 * 3.0 * 2.0) / (3.0 * 2.0 + 0.25)) < 1e-12);

  const auto f = [&](double v) {
    return 2.0 * v * std::sqrt(2.5 * 3.0 * 2.0) - v * v * (3.0 * 2.0 + 0.25);
  };
  CHECK(std::abs(y(0, 0) - golden_max(f, 0.0, 5.0)) < 1e-7);

  p.at(0, 0) = 0.0;
  CHECK(update_y(g, p, mu, noise)(0, 0) == 0.0);
}

TEST_CASE("kkt powers: symmetry, budget, residual") {
  // Symmetric two-user slot must split the budget evenly.
  EffectiveGains g = EffectiveGains::zeros(1, 2);
  for (int rx = 0; rx < 2; ++rx)
    for (int tx = 0; tx < 2; ++tx) g.at(0, rx, tx) = 2e-7;
  MatrixXd mu = MatrixXd::Constant(1, 2, 0.8);
  MatrixXd y = MatrixXd::Constant(1, 2, 300.0);
  std::vector<double> beta;
  bool infeasible = false;
  const double budget = 10.0;
  const PowerSchedule p = solve_power_kkt(g, mu, y, budget, &beta, &infeasible);
  CHECK_FALSE(infeasible);
  CHECK(std::abs(p.at(0, 0) - p.at(0, 1)) < 1e-9);
  CHECK(p.slot_sum(0) <= budget);
  CHECK(p.slot_sum(0) >= 0.9 * budget);
  const MatrixXd res = kkt_residual(g, mu, y, p, beta);
  CHECK(res.cwiseAbs().maxCoeff() < 1e-6);

  // Zero-gain transmitter gets zero power.
  EffectiveGains g0 = g;
  for (int rx = 0; rx < 2; ++rx) g0.at(0, rx, 1) = 0.0;
  const PowerSchedule pz = solve_power_kkt(g0, mu, y, budget, &beta, &infeasible);
  CHECK(pz.at(0, 1) == 0.0);
}

TEST_CASE("solver reaches the two-user grid optimum") {
  std::mt19937_64 rng(7);
  const double budget = 10.0, noise = 1e-9;
  for (int trial = 0; trial < 8; ++trial) {
    const EffectiveGains g = random_gains(1, 2, rng, true);
    PowerSolveOptions opt;
    opt.total_power = budget;
    const PowerSolveResult res = prox_linear(g, noise, opt);
    CHECK_FALSE(res.infeasible);
    double best = 0.0;
    PowerSchedule probe = PowerSchedule::uniform(1, 2, 0.0);
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; ++j) {
        const double p1 = budget * i / 199.0, p2 = budget * j / 199.0;
        if (p1 + p2 > budget) continue;
        probe.at(0, 0) = p1;
        probe.at(0, 1) = p2;
        best = std::max(best, sum_rate(g, probe, noise));
      }
    CHECK(res.objective_trace.back() >= best - 1e-3);
  }
}

TEST_CASE("single user saturates the budget in two iterations") {
  std::mt19937_64 rng(11);
  const EffectiveGains g = random_gains(3, 1, rng, true);
  PowerSolveOptions opt;
  const PowerSolveResult res = prox_linear(g, 1e-9, opt);
  for (int n = 0; n < 3; ++n) {
    CHECK(res.power.at(n, 0) <= opt.total_power);
    CHECK(res.power.at(n, 0) >= 0.9 * opt.total_power);
  }
  // Already settled after two iterations.
  CHECK(std::abs(res.objective_trace[2] - res.objective_trace.back()) < 1e-9);
}

TEST_CASE("objective trace never decreases") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 6; ++trial) {
    const EffectiveGains g = random_gains(2, 3, rng, trial % 2 == 0);
    const PowerSolveResult res = prox_linear(g, 1e-9, {});
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
      CHECK(res.objective_trace[i] >= res.objective_trace[i - 1] - 1e-9);
  }
}

TEST_CASE("surrogates collapse onto the sum rate at the multiplier optimum") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const EffectiveGains g = random_gains(2, 3, rng, true);
    PowerSchedule p = PowerSchedule::uniform(2, 3, 0.0);
    std::uniform_real_distribution<double> pd(0.5, 4.0);
    for (int n = 0; n < 2; ++n)
      for (int m = 0; m < 3; ++m) p.at(n, m) = pd(rng);
    const double noise = 1e-9;
    const MatrixXd mu = sinr_and_rates(g, p, noise).sinr;
    const MatrixXd y = update_y(g, p, mu, noise);
    // The pair is a joint fixed point of both closed-form updates.
    CHECK((update_mu(g, p, y) - mu).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + mu.cwiseAbs().maxCoeff()));
    const double ga = sum_rate(g, p, noise);
    const double ga1 = surrogate_dual(g, p, mu, noise);
    const double ga2 = surrogate_quadratic(g, p, mu, y, noise);
    CHECK(std::abs(ga1 - ga) < 1e-9 * (1.0 + std::abs(ga)));
    CHECK(std::abs(ga2 - ga) < 1e-9 * (1.0 + std::abs(ga)));
  }
}

TEST_CASE("three-user solve lands within one percent of the simplex grid") {
  std::mt19937_64 rng(77);
  const EffectiveGains g = random_gains(1, 3, rng, true);
  const double budget = 10.0, noise = 1e-9;
  PowerSolveOptions opt;
  opt.total_power = budget;
  const PowerSolveResult res = prox_linear(g, noise, opt);
  // The optimum sits on the full-budget face: scan it.
  double best = 0.0;
  PowerSchedule probe = PowerSchedule::uniform(1, 3, 0.0);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200 - i; ++j) {
      const double p1 = budget * i / 199.0, p2 = budget * j / 199.0;
      const double p3 = budget - p1 - p2;
      if (p3 < 0.0) continue;
      probe.at(0, 0) = p1;
      probe.at(0, 1) = p2;
      probe.at(0, 2) = p3;
      best = std::max(best, sum_rate(g, probe, noise));
    }
  CHECK(res.objective_trace.back() >= best * 0.99);
}
