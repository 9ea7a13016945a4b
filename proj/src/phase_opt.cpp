#include "aam/phase_opt.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace aam {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_phase(double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

void check_shapes(const LinkContext& ctx, const PhaseSchedule& phases,
                  const PowerSchedule& power) {
  if (phases.num_slots != ctx.num_slots || phases.num_layers != ctx.num_layers ||
      phases.num_atoms != ctx.num_atoms)
    throw std::invalid_argument("phases: shape does not match the link context");
  if (power.num_slots != ctx.num_slots || power.num_evtols != ctx.num_evtols)
    throw std::invalid_argument("power: shape does not match the link context");
}

}  // namespace

PhaseGradient PhaseGradient::zeros(int slots, int layers, int atoms) {
  PhaseGradient g;
  g.num_slots = slots;
  g.num_layers = layers;
  g.num_atoms = atoms;
  g.dtheta.assign(static_cast<std::size_t>(slots) * layers * atoms, 0.0);
  return g;
}

double PhaseGradient::norm_sq() const {
  double s = 0.0;
  for (double d : dtheta) s += d * d;
  return s;
}

double rate_objective(const LinkContext& ctx, const PhaseSchedule& phases,
                      const PowerSchedule& power) {
  check_shapes(ctx, phases, power);
  return sinr_and_rates(effective_gains(ctx, phases), power, ctx.noise_power).total();
}

PhaseGradient phase_gradient(const LinkContext& ctx, const PhaseSchedule& phases,
                             const PowerSchedule& power) {
  check_shapes(ctx, phases, power);
  const int N = ctx.num_slots, M = ctx.num_evtols;
  const int L = ctx.num_layers, K = ctx.num_atoms;
  PhaseGradient gr = PhaseGradient::zeros(N, L, K);

  MatrixXcd feed_mat(K, M);
  for (int m = 0; m < M; ++m) feed_mat.col(m) = ctx.feeds[m];

  std::vector<VectorXcd> ph(L, VectorXcd(K));
  std::vector<MatrixXcd> pre(L), post(L);
  VectorXcd eff(M);
  VectorXd own(M), sinr(M), a(M);

  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k)
        ph[l](k) = std::polar(1.0, phases.at(n, l, k));

    // pre[l]: feeds propagated up to layer l's input; post[l]: channel rows
    // pulled back to layer l's output. Their phase-weighted product at any
    // layer reproduces the end-to-end effective channels.
    pre[0] = feed_mat;
    for (int l = 1; l < L; ++l)
      pre[l] = ctx.inter_layer * (ph[l - 1].asDiagonal() * pre[l - 1]);
    post[L - 1].resize(M, K);
    for (int m = 0; m < M; ++m) post[L - 1].row(m) = ctx.h[n][m].adjoint();
    for (int l = L - 2; l >= 0; --l)
      post[l] = (post[l + 1] * ph[l + 1].asDiagonal()) * ctx.inter_layer;

    double total = ctx.noise_power;
    for (int m = 0; m < M; ++m) {
      eff(m) = post[0].row(m) * (ph[0].asDiagonal() * pre[0].col(m));
      own(m) = std::norm(eff(m)) * power.at(n, m);
      total += own(m);
    }
    for (int m = 0; m < M; ++m) sinr(m) = own(m) / (total - own(m));
    const double gamma = 1.0 / total;

    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < K; ++k) {
        // a(m): power-weighted sensitivity of eVTOL m's beam gain to this
        // phase, from the exact differential of |post . ph . pre|^2.
        double asum = 0.0;
        for (int m = 0; m < M; ++m) {
          const cplx sig = post[l](m, k) * ph[l](k) * pre[l](k, m) * cplx(0.0, 1.0);
          const double eta = 2.0 * std::real(std::conj(eff(m)) * sig);
          a(m) = power.at(n, m) * eta;
          asum += a(m);
        }
        double entry = 0.0;
        for (int m = 0; m < M; ++m) entry += a(m) - sinr(m) * (asum - a(m));
        gr.at(n, l, k) = gamma * entry;
      }
    }
  }
  return gr;
}

double armijo_step(const std::function<double(const PhaseSchedule&)>& objective,
                   const PhaseSchedule& phases, const PhaseGradient& grad,
                   double current_value, const ArmijoOptions& opt) {
  if (grad.num_slots != phases.num_slots || grad.num_layers != phases.num_layers ||
      grad.num_atoms != phases.num_atoms)
    throw std::invalid_argument("grad: shape does not match phases");
  const double g2 = grad.norm_sq();
  if (!(g2 > 0.0)) throw std::invalid_argument("grad: must be nonzero");

  PhaseSchedule trial = phases;
  for (double count = 1.0; count >= opt.floor; count *= opt.shrink) {
    for (std::size_t i = 0; i < trial.theta.size(); ++i)
      trial.theta[i] = phases.theta[i] + count * grad.dtheta[i];
    if (objective(trial) >= current_value + opt.accept_fraction * count * g2)
      return count;
  }
  return 0.0;
}

PhaseOptResult gradient_ascent(const LinkContext& ctx, const PhaseSchedule& initial,
                               const PowerSchedule& power, const PhaseOptOptions& opt) {
  check_shapes(ctx, initial, power);
  PhaseOptResult res;
  res.phases = initial;
  for (double& t : res.phases.theta) t = wrap_phase(t);

  double value = rate_objective(ctx, res.phases, power);
  res.objective_trace.push_back(value);
  const auto objective = [&](const PhaseSchedule& s) { return rate_objective(ctx, s, power); };

  for (int t = 0; t < opt.max_iterations; ++t) {
    const PhaseGradient grad = phase_gradient(ctx, res.phases, power);
    if (!(grad.norm_sq() > 0.0)) break;
    const double count = armijo_step(objective, res.phases, grad, value, opt.armijo);
    if (count == 0.0) break;
    for (std::size_t i = 0; i < res.phases.theta.size(); ++i)
      res.phases.theta[i] = wrap_phase(res.phases.theta[i] + count * grad.dtheta[i]);
    const double next = rate_objective(ctx, res.phases, power);
    res.objective_trace.push_back(next);
    const double improvement = next - value;
    value = next;
    if (improvement < opt.tolerance) break;
  }
  return res;
}

}  // namespace aam
