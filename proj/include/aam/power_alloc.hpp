#pragma once

// Per-slot transmit-power optimization by fractional programming: the sum
// rate is lifted with a Lagrangian-dual transform (multipliers mu) and a
// quadratic transform (multipliers y); powers then follow in closed form
// from the stationarity conditions, with a per-slot dual variable beta
// enforcing the power budget.

#include <vector>

#include "aam/sim_channel.hpp"

namespace aam {

struct PowerSolveOptions {
  double total_power = 10.0;  // per-slot budget, mW
  int max_iterations = 20;
};

struct PowerSolveResult {
  PowerSchedule power;
  std::vector<double> objective_trace;  // sum rate before the first and after each iteration
  std::vector<double> beta;             // final dual variable per slot
  MatrixXd mu, y;                       // N x M multipliers at exit
  bool infeasible = false;
};

// Sum rate over all slots and eVTOLs (the objective being lifted).
double sum_rate(const EffectiveGains& g, const PowerSchedule& p, double noise_power);

// First surrogate: rates with the log detached through mu.
double surrogate_dual(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& mu,
                      double noise_power);

// Second surrogate: ratios detached through y. Coincides with surrogate_dual
// and sum_rate when mu and y sit at their closed-form optima.
double surrogate_quadratic(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& mu,
                           const MatrixXd& y, double noise_power);

// Closed-form multiplier updates, N x M each.
MatrixXd update_mu(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& y);
MatrixXd update_y(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& mu,
                  double noise_power);

// Closed-form powers for fixed multipliers. Per slot, beta >= 0 is the
// smallest value whose powers respect the budget; beta = 0 solutions below
// the budget are taken as-is.
PowerSchedule solve_power_kkt(const EffectiveGains& g, const MatrixXd& mu, const MatrixXd& y,
                              double total_power, std::vector<double>* beta_out = nullptr,
                              bool* infeasible = nullptr);

// Stationarity residual of the budgeted surrogate at the returned powers;
// zero rows where the power is zero.
MatrixXd kkt_residual(const EffectiveGains& g, const MatrixXd& mu, const MatrixXd& y,
                      const PowerSchedule& p, const std::vector<double>& beta);

// Alternating multiplier/power iterations from a uniform start.
PowerSolveResult prox_linear(const EffectiveGains& g, double noise_power,
                             const PowerSolveOptions& opt);

}  // namespace aam
