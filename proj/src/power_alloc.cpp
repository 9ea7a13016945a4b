#include "aam/power_alloc.hpp"

#include <cmath>
#include <stdexcept>

namespace aam {

namespace {

double slot_load(const EffectiveGains& g, const PowerSchedule& p, int n, int rx) {
  double s = 0.0;
  for (int tx = 0; tx < g.num_evtols; ++tx) s += g.at(n, rx, tx) * p.at(n, tx);
  return s;
}

// Closed-form powers for one slot at a given dual variable.
void slot_powers(const EffectiveGains& g, const MatrixXd& mu, const MatrixXd& y, int n,
                 double beta, std::vector<double>& out, bool* infeasible) {
  const int M = g.num_evtols;
  for (int m = 0; m < M; ++m) {
    const double c = y(n, m) * std::sqrt((1.0 + mu(n, m)) * g.at(n, m, m));
    if (c <= 0.0) {
      out[m] = 0.0;
      continue;
    }
    double d = beta;
    for (int rx = 0; rx < M; ++rx) d += y(n, rx) * y(n, rx) * g.at(n, rx, m);
    if (!(d > 0.0)) {
      if (infeasible) *infeasible = true;
      out[m] = 0.0;
      continue;
    }
    const double root = c / d;
    out[m] = root * root;
  }
}

double vec_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

double sum_rate(const EffectiveGains& g, const PowerSchedule& p, double noise_power) {
  return sinr_and_rates(g, p, noise_power).total();
}

double surrogate_dual(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& mu,
                      double noise_power) {
  double total = 0.0;
  for (int n = 0; n < g.num_slots; ++n)
    for (int m = 0; m < g.num_evtols; ++m) {
      const double u = mu(n, m);
      total += std::log1p(u) - u +
               (1.0 + u) * g.at(n, m, m) * p.at(n, m) / (slot_load(g, p, n, m) + noise_power);
    }
  return total;
}

double surrogate_quadratic(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& mu,
                           const MatrixXd& y, double noise_power) {
  double total = 0.0;
  for (int n = 0; n < g.num_slots; ++n)
    for (int m = 0; m < g.num_evtols; ++m) {
      const double u = mu(n, m);
      total += std::log1p(u) - u +
               2.0 * y(n, m) * std::sqrt((1.0 + u) * g.at(n, m, m) * p.at(n, m)) -
               y(n, m) * y(n, m) * (slot_load(g, p, n, m) + noise_power);
    }
  return total;
}

MatrixXd update_mu(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& y) {
  MatrixXd mu(g.num_slots, g.num_evtols);
  for (int n = 0; n < g.num_slots; ++n)
    for (int m = 0; m < g.num_evtols; ++m) {
      const double z2 = g.at(n, m, m) * p.at(n, m);
      const double ym = y(n, m);
      mu(n, m) = 0.5 * ym * ym * z2 + 0.5 * ym * std::sqrt(z2 * (ym * ym * z2 + 4.0));
    }
  return mu;
}

MatrixXd update_y(const EffectiveGains& g, const PowerSchedule& p, const MatrixXd& mu,
                  double noise_power) {
  MatrixXd y(g.num_slots, g.num_evtols);
  for (int n = 0; n < g.num_slots; ++n)
    for (int m = 0; m < g.num_evtols; ++m)
      y(n, m) = std::sqrt((1.0 + mu(n, m)) * g.at(n, m, m) * p.at(n, m)) /
                (slot_load(g, p, n, m) + noise_power);
  return y;
}

PowerSchedule solve_power_kkt(const EffectiveGains& g, const MatrixXd& mu, const MatrixXd& y,
                              double total_power, std::vector<double>* beta_out,
                              bool* infeasible) {
  if (!(total_power > 0.0)) throw std::invalid_argument("power budget: must be > 0");
  const int M = g.num_evtols;
  PowerSchedule p = PowerSchedule::uniform(g.num_slots, M, 0.0);
  if (beta_out) beta_out->assign(g.num_slots, 0.0);
  if (infeasible) *infeasible = false;
  std::vector<double> trial(M, 0.0);

  for (int n = 0; n < g.num_slots; ++n) {
    slot_powers(g, mu, y, n, 0.0, trial, infeasible);
    double beta = 0.0;
    if (vec_sum(trial) > total_power) {
      // Bracket the budget crossing: exponential raise, then a linear walk
      // back from the feasible side, then bisection so the accepted powers
      // sit at the top of the band (smallest feasible beta).
      double lo = 0.0, hi = 1e-6;
      slot_powers(g, mu, y, n, hi, trial, infeasible);
      int guard = 0;
      while (vec_sum(trial) > total_power && guard++ < 400) {
        lo = hi;
        hi *= 2.0;
        slot_powers(g, mu, y, n, hi, trial, infeasible);
      }
      if (vec_sum(trial) > total_power) {
        if (infeasible) *infeasible = true;
      } else {
        const double step = (hi - lo) / 100.0;
        for (double b = hi - step; b > lo; b -= step) {
          slot_powers(g, mu, y, n, b, trial, infeasible);
          if (vec_sum(trial) > total_power) {
            lo = b;
            break;
          }
          hi = b;
        }
        for (int it = 0; it < 200 && (hi - lo) > 1e-15 * (1.0 + hi); ++it) {
          const double mid = 0.5 * (lo + hi);
          slot_powers(g, mu, y, n, mid, trial, infeasible);
          if (vec_sum(trial) > total_power)
            lo = mid;
          else
            hi = mid;
        }
        beta = hi;
        slot_powers(g, mu, y, n, beta, trial, infeasible);
      }
    }
    for (int m = 0; m < M; ++m) p.at(n, m) = trial[m];
    if (beta_out) (*beta_out)[n] = beta;
  }
  return p;
}

MatrixXd kkt_residual(const EffectiveGains& g, const MatrixXd& mu, const MatrixXd& y,
                      const PowerSchedule& p, const std::vector<double>& beta) {
  MatrixXd r = MatrixXd::Zero(g.num_slots, g.num_evtols);
  for (int n = 0; n < g.num_slots; ++n)
    for (int m = 0; m < g.num_evtols; ++m) {
      if (!(p.at(n, m) > 0.0)) continue;
      double d = beta[n];
      for (int rx = 0; rx < g.num_evtols; ++rx) d += y(n, rx) * y(n, rx) * g.at(n, rx, m);
      r(n, m) = y(n, m) * std::sqrt((1.0 + mu(n, m)) * g.at(n, m, m) / p.at(n, m)) - d;
    }
  return r;
}

PowerSolveResult prox_linear(const EffectiveGains& g, double noise_power,
                             const PowerSolveOptions& opt) {
  PowerSolveResult res;
  res.power = PowerSchedule::uniform(g.num_slots, g.num_evtols, opt.total_power / g.num_evtols);
  res.objective_trace.push_back(sum_rate(g, res.power, noise_power));
  for (int t = 0; t < opt.max_iterations; ++t) {
    // Every rate grows along the ray t*p (t >= 1), so lifting each slot onto
    // the budget face before the multiplier update never hurts and avoids
    // the slow approach to a boundary optimum from the inside.
    for (int n = 0; n < g.num_slots; ++n) {
      const double s = res.power.slot_sum(n);
      if (s > 0.0 && s < opt.total_power) {
        const double scale = opt.total_power / s;
        for (int m = 0; m < g.num_evtols; ++m) res.power.at(n, m) *= scale;
      }
    }
    // Joint multiplier optimum for the current powers: mu equals the SINR,
    // under which the dual and quadratic surrogates are tight, and y follows
    // in closed form. (Both multiplier updates are stationary at this pair.)
    res.mu = sinr_and_rates(g, res.power, noise_power).sinr;
    res.y = update_y(g, res.power, res.mu, noise_power);
    res.power = solve_power_kkt(g, res.mu, res.y, opt.total_power, &res.beta, &res.infeasible);
    res.objective_trace.push_back(sum_rate(g, res.power, noise_power));
  }
  return res;
}

}  // namespace aam
