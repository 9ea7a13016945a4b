#pragma once

// Stack phase tuning: exact sum-rate gradient through the cascaded response
// and backtracking-line-search ascent over the per-slot phase schedule.

#include <functional>
#include <vector>

#include "aam/sim_channel.hpp"

namespace aam {

// Rate sensitivity to each phase, same [slot][layer][atom] layout as
// PhaseSchedule.
struct PhaseGradient {
  int num_slots = 0, num_layers = 0, num_atoms = 0;
  std::vector<double> dtheta;

  static PhaseGradient zeros(int slots, int layers, int atoms);
  double& at(int n, int l, int k) { return dtheta[(static_cast<std::size_t>(n) * num_layers + l) * num_atoms + k]; }
  double at(int n, int l, int k) const { return dtheta[(static_cast<std::size_t>(n) * num_layers + l) * num_atoms + k]; }
  double norm_sq() const;
};

// Total sum rate (nats) over all slots for the given phases and powers.
double rate_objective(const LinkContext& ctx, const PhaseSchedule& phases,
                      const PowerSchedule& power);

// Exact gradient of the total sum rate with respect to every phase. Slots
// with zero power contribute zero entries.
PhaseGradient phase_gradient(const LinkContext& ctx, const PhaseSchedule& phases,
                             const PowerSchedule& power);

struct ArmijoOptions {
  double accept_fraction = 0.001;  // required gain per unit of count*|grad|^2
  double shrink = 0.5;
  double floor = 0x1p-30;  // last count tried before giving up
};

// Largest count in {1, shrink, shrink^2, ...} down to the floor satisfying
//   objective(phases + count*grad) >= current_value + accept_fraction*count*|grad|^2.
// Returns 0 when every candidate fails. The trial schedule is not wrapped;
// callers wrap after accepting a step.
double armijo_step(const std::function<double(const PhaseSchedule&)>& objective,
                   const PhaseSchedule& phases, const PhaseGradient& grad,
                   double current_value, const ArmijoOptions& opt = {});

struct PhaseOptOptions {
  double tolerance = 1e-4;  // stop once a step improves the rate by less
  int max_iterations = 500;
  ArmijoOptions armijo{};
};

struct PhaseOptResult {
  PhaseSchedule phases;
  std::vector<double> objective_trace;  // initial value, then one per step
};

// Ascent on the sum rate from the given starting phases; every accepted
// iterate is wrapped back into [0, 2*pi).
PhaseOptResult gradient_ascent(const LinkContext& ctx, const PhaseSchedule& initial,
                               const PowerSchedule& power, const PhaseOptOptions& opt = {});

}  // namespace aam
