#include "aam/dqn_agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace aam {

namespace {

struct ForwardCache {
  std::vector<VectorXd> act;  // act[0] = input, act.back() = output
  std::vector<VectorXd> pre;  // pre-activation per weight layer
};

VectorXd forward_cached(const QNetwork& net, const VectorXd& input, ForwardCache* cache) {
  if (input.size() != net.sizes.front())
    throw std::invalid_argument("state: length must match the network input width");
  VectorXd x = input;
  if (cache) cache->act.push_back(x);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    VectorXd z = net.weights[l] * x + net.biases[l];
    if (cache) cache->pre.push_back(z);
    x = (l + 1 < net.weights.size()) ? z.cwiseMax(0.0) : z;
    if (cache) cache->act.push_back(x);
  }
  return x;
}

}  // namespace

QNetwork QNetwork::make(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("layer_sizes: need at least input and output widths");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("layer_sizes: widths must be positive");
  QNetwork net;
  net.sizes = layer_sizes;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const double scale = std::sqrt(2.0 / layer_sizes[l]);
    MatrixXd w(layer_sizes[l + 1], layer_sizes[l]);
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) w(r, c) = scale * gauss(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(VectorXd::Zero(layer_sizes[l + 1]));
  }
  return net;
}

VectorXd QNetwork::forward(const VectorXd& input) const {
  return forward_cached(*this, input, nullptr);
}

int QNetwork::parameter_count() const {
  int n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<int>(weights[l].size() + biases[l].size());
  return n;
}

void ReplayBuffer::push(Transition t) {
  if (capacity_ == 0) throw std::invalid_argument("capacity: must be positive");
  if (data_.size() < capacity_)
    data_.push_back(std::move(t));
  else
    data_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
  count = std::min(count, data_.size());
  std::vector<std::size_t> idx(data_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(data_[idx[i]]);
  }
  return out;
}

void DQNConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("dqn.learning_rate: must be positive");
  if (!(discount > 0.0 && discount < 1.0))
    throw std::invalid_argument("dqn.discount: must lie in (0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
      !(epsilon_end >= 0.0 && epsilon_end <= epsilon_start))
    throw std::invalid_argument("dqn.epsilon_end: must satisfy 0 <= end <= start <= 1");
  if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
    throw std::invalid_argument("dqn.epsilon_decay_fraction: must lie in [0, 1]");
  if (batch_size < 1) throw std::invalid_argument("dqn.batch_size: must be positive");
  if (target_sync_period < 1)
    throw std::invalid_argument("dqn.target_sync_period: must be positive");
  if (episodes < 1) throw std::invalid_argument("dqn.episodes: must be positive");
  if (!(action_delta > 0.0))
    throw std::invalid_argument("dqn.action_delta: must be positive");
  if (buffer_capacity < static_cast<std::size_t>(batch_size))
    throw std::invalid_argument("dqn.buffer_capacity: must hold at least one batch");
  if (!(input_scale > 0.0))
    throw std::invalid_argument("dqn.input_scale: must be positive");
}

VectorXd encode_state(const FlightState& state, const std::vector<Vector3d>& targets) {
  const std::size_t fleet = state.positions.size();
  if (fleet == 0) throw std::invalid_argument("state.positions: must not be empty");
  if (targets.size() != fleet)
    throw std::invalid_argument("targets: size must match the fleet");
  Vector3d waypoint = Vector3d::Zero();
  for (const Vector3d& t : targets) waypoint += t;
  waypoint /= static_cast<double>(fleet);
  VectorXd s(3 + 3 * static_cast<int>(fleet));
  s.segment<3>(0) = waypoint;
  for (std::size_t i = 0; i < fleet; ++i)
    s.segment<3>(3 + 3 * static_cast<int>(i)) = state.positions[i] - targets[i];
  return s;
}

std::vector<Action> enumerate_actions(int evtols, double delta) {
  if (evtols < 1) throw std::invalid_argument("evtols: must be positive");
  std::vector<Action> actions;
  actions.reserve(static_cast<std::size_t>(evtols) * 9);
  for (int i = 0; i < evtols; ++i)
    for (int field = 0; field < 3; ++field)
      for (double d : {delta, -delta, 0.0}) actions.push_back({i, field, d});
  return actions;
}

void apply_action(CPFParams& params, const Action& action) {
  if (action.evtol < 0 || action.evtol >= static_cast<int>(params.k_target.size()))
    throw std::invalid_argument("action.evtol: index outside the gain lists");
  std::vector<double>* gains = nullptr;
  switch (action.field) {
    case 0: gains = &params.k_target; break;
    case 1: gains = &params.k_separation; break;
    case 2: gains = &params.k_communication; break;
    default: throw std::invalid_argument("action.field: must be 0, 1, or 2");
  }
  double& g = (*gains)[action.evtol];
  g = std::max(0.0, g + action.delta);
}

std::vector<double> reward(const FlightState& state, const std::vector<Vector3d>& targets,
                           const VectorXd& sinr, const RewardParams& rp,
                           const CPFParams& cpf) {
  const std::size_t fleet = state.positions.size();
  if (targets.size() != fleet)
    throw std::invalid_argument("targets: size must match the fleet");
  if (state.velocities.size() != fleet)
    throw std::invalid_argument("state.velocities: size must match state.positions");
  double rate_sum = 0.0;
  for (int m = 0; m < sinr.size(); ++m) rate_sum += std::log1p(sinr(m));

  std::vector<double> r(fleet, 0.0);
  for (std::size_t i = 0; i < fleet; ++i) {
    const Vector3d to_target = targets[i] - state.positions[i];
    const double d_tar = to_target.norm();
    const double v_tar = d_tar > 0.0 ? state.velocities[i].dot(to_target / d_tar) : 0.0;
    double val = rp.alpha1 * v_tar * (1.0 + rp.alpha2 * d_tar);

    // Escape speed is measured against the nearest in-band neighbor and
    // weighted once per in-band pair.
    std::vector<double> in_band;
    double dmin = std::numeric_limits<double>::infinity();
    std::size_t nearest = fleet;
    for (std::size_t j = 0; j < fleet; ++j) {
      if (j == i) continue;
      const double d = (state.positions[i] - state.positions[j]).norm();
      if (d >= cpf.d_separation) continue;
      if (!(d > 0.0))
        throw std::invalid_argument("state.positions: coincident eVTOLs");
      in_band.push_back(d);
      if (d < dmin) {
        dmin = d;
        nearest = j;
      }
    }
    if (nearest < fleet) {
      const Vector3d away = (state.positions[i] - state.positions[nearest]) / dmin;
      const double v_sep = state.velocities[i].dot(away);
      for (double d : in_band) val += rp.beta * v_sep / d;
    }
    r[i] = val + rate_sum;
  }
  return r;
}

LossGradient mse_loss_and_gradient(const QNetwork& net, const std::vector<VectorXd>& states,
                                   const std::vector<int>& actions,
                                   const std::vector<double>& targets) {
  if (states.empty()) throw std::invalid_argument("batch: must not be empty");
  if (actions.size() != states.size() || targets.size() != states.size())
    throw std::invalid_argument("batch: states, actions, and targets must align");

  LossGradient out;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    out.weight_grads.push_back(MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    out.bias_grads.push_back(VectorXd::Zero(net.biases[l].size()));
  }
  const double inv_batch = 1.0 / static_cast<double>(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) {
    ForwardCache cache;
    const VectorXd q = forward_cached(net, states[j], &cache);
    if (actions[j] < 0 || actions[j] >= q.size())
      throw std::invalid_argument("batch: action index outside the output layer");
    const double err = q(actions[j]) - targets[j];
    out.loss += err * err * inv_batch;

    VectorXd delta = VectorXd::Zero(q.size());
    delta(actions[j]) = 2.0 * err * inv_batch;
    for (int l = static_cast<int>(net.weights.size()) - 1; l >= 0; --l) {
      out.weight_grads[l] += delta * cache.act[l].transpose();
      out.bias_grads[l] += delta;
      if (l > 0) {
        VectorXd back = net.weights[l].transpose() * delta;
        delta = (cache.pre[l - 1].array() > 0.0).select(back, 0.0);
      }
    }
  }
  return out;
}

double train_step(QNetwork& net, const QNetwork& target_net,
                  const std::vector<Transition>& batch, double discount,
                  double learning_rate, double gradient_clip) {
  if (batch.empty()) throw std::invalid_argument("batch: must not be empty");
  std::vector<VectorXd> states;
  std::vector<int> actions;
  std::vector<double> ys;
  states.reserve(batch.size());
  for (const Transition& tr : batch) {
    double y = tr.reward;
    if (!tr.terminal) y += discount * target_net.forward(tr.next_state).maxCoeff();
    states.push_back(tr.state);
    actions.push_back(tr.action);
    ys.push_back(y);
  }
  LossGradient lg = mse_loss_and_gradient(net, states, actions, ys);

  double norm_sq = 0.0;
  for (std::size_t l = 0; l < lg.weight_grads.size(); ++l)
    norm_sq += lg.weight_grads[l].squaredNorm() + lg.bias_grads[l].squaredNorm();
  double scale = 1.0;
  if (gradient_clip > 0.0 && norm_sq > gradient_clip * gradient_clip)
    scale = gradient_clip / std::sqrt(norm_sq);

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    net.weights[l] -= learning_rate * scale * lg.weight_grads[l];
    net.biases[l] -= learning_rate * scale * lg.bias_grads[l];
  }
  return lg.loss;
}

void sync_target(const QNetwork& net, QNetwork& target_net) {
  if (net.sizes != target_net.sizes)
    throw std::invalid_argument("target_net: layer sizes must match the online network");
  target_net.weights = net.weights;
  target_net.biases = net.biases;
}

TrainingResult run_training(const TrainingEnv& env, const DQNConfig& cfg,
                            const QNetwork* warm_start) {
  cfg.validate();
  env.kinematics.validate();
  env.corridor.validate();
  env.initial_params.validate();
  env.geometry.validate();
  env.channel.validate();
  const int fleet = static_cast<int>(env.corridor.entries.size());
  if (fleet == 0) throw std::invalid_argument("corridor.entries: must not be empty");
  if (static_cast<int>(env.initial_params.k_target.size()) != fleet)
    throw std::invalid_argument("initial_params.k_target: size must match the fleet");
  if (env.power.num_evtols != fleet)
    throw std::invalid_argument("power.num_evtols: must match the fleet");
  if (env.geometry.num_antennas < fleet)
    throw std::invalid_argument("geometry.num_antennas: must cover the fleet");
  if (env.phases.num_slots != env.power.num_slots)
    throw std::invalid_argument("phases.num_slots: must match power.num_slots");
  const int slots = env.power.num_slots;
  if (slots < 1) throw std::invalid_argument("power.num_slots: must be positive");
  if (!env.start.positions.empty() &&
      (static_cast<int>(env.start.positions.size()) != fleet ||
       static_cast<int>(env.start.velocities.size()) != fleet))
    throw std::invalid_argument("env.start: fleet size must match the corridor entries");
  const int steps =
      cfg.steps_per_episode > 0 ? std::min(cfg.steps_per_episode, slots) : slots;

  std::mt19937_64 master(cfg.seed);
  const std::uint64_t net_seed = master();
  const std::uint64_t policy_seed = master();
  const std::uint64_t replay_seed = master();

  const std::vector<Action> actions = enumerate_actions(fleet, cfg.action_delta);
  const int state_dim = 3 + 3 * fleet;
  QNetwork net;
  if (warm_start) {
    if (warm_start->sizes.front() != state_dim ||
        warm_start->sizes.back() != static_cast<int>(actions.size()))
      throw std::invalid_argument("warm_start: network widths do not fit this fleet");
    net = *warm_start;
  } else {
    net = QNetwork::make({state_dim, 64, 64, static_cast<int>(actions.size())}, net_seed);
  }
  QNetwork target = net;

  ReplayBuffer buffer(cfg.buffer_capacity);
  std::mt19937_64 policy_rng(policy_seed);
  std::mt19937_64 replay_rng(replay_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> random_action(0, static_cast<int>(actions.size()) - 1);

  const MatrixXcd inter = build_inter_layer(env.geometry);
  const std::vector<VectorXcd> feed = build_feed_vectors(env.geometry);
  const double exit_band = 2.0 * env.kinematics.max_speed * env.kinematics.slot_duration;

  // SINRs the fleet would see at the given positions under the slot's
  // fixed transmission schedule.
  const auto slot_sinr = [&](const std::vector<Vector3d>& positions, int slot) {
    const MatrixXcd casc = cascade_beamforming(env.phases, slot, inter);
    EffectiveGains g = EffectiveGains::zeros(1, fleet);
    for (int tx = 0; tx < fleet; ++tx) {
      const VectorXcd h =
          air_ground_channel(positions[tx], env.station, env.channel, env.geometry.atoms_per_layer);
      const cplx e = h.dot(casc * feed[tx]);
      for (int rx = 0; rx < fleet; ++rx) g.at(0, rx, tx) = std::norm(e);
    }
    PowerSchedule row = PowerSchedule::uniform(1, fleet, 0.0);
    for (int m = 0; m < fleet; ++m) row.at(0, m) = env.power.at(slot, m);
    return sinr_and_rates(g, row, env.channel.noise_power).sinr.row(0).transpose().eval();
  };

  TrainingResult res;
  double best_reward = -std::numeric_limits<double>::infinity();
  long global_step = 0;
  const double decay_span = cfg.epsilon_decay_fraction * cfg.episodes;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double frac = decay_span > 0.0 ? std::min(1.0, ep / decay_span) : 1.0;
    const double eps = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;

    CPFParams params = env.initial_params;
    FlightState state;
    if (env.start.positions.empty()) {
      state.positions = env.corridor.entries;
      state.velocities.assign(fleet, Vector3d::Zero());
    } else {
      state = env.start;
    }

    std::vector<std::vector<Vector3d>> path(fleet);
    for (int m = 0; m < fleet; ++m) path[m].push_back(state.positions[m]);

    double ep_reward = 0.0;
    for (int t = 0; t < steps; ++t) {
      std::vector<Vector3d> targets(fleet);
      for (int i = 0; i < fleet; ++i)
        targets[i] = moving_target(env.corridor, state.positions[i], i, env.kinematics);
      const VectorXd s = cfg.input_scale * encode_state(state, targets);

      int action_id;
      if (unit(policy_rng) < eps) {
        action_id = random_action(policy_rng);
      } else {
        Eigen::Index best = 0;
        net.forward(s).maxCoeff(&best);
        action_id = static_cast<int>(best);
      }
      apply_action(params, actions[action_id]);

      const auto acc = composite_acceleration(state, params, targets, env.obstacles);
      const FlightState next = step_kinematics(state, acc, env.kinematics, env.corridor);

      const VectorXd sinr =
          env.use_rate_reward ? slot_sinr(next.positions, t) : VectorXd::Zero(fleet).eval();
      const std::vector<double> per_craft = reward(next, targets, sinr, env.reward_params, params);
      double r = 0.0;
      for (double v : per_craft) r += v;
      ep_reward += r;

      bool terminal = true;
      for (int i = 0; i < fleet; ++i)
        if ((next.positions[i] - env.corridor.exits[i]).norm() > exit_band) {
          terminal = false;
          break;
        }

      std::vector<Vector3d> next_targets(fleet);
      for (int i = 0; i < fleet; ++i)
        next_targets[i] = moving_target(env.corridor, next.positions[i], i, env.kinematics);
      const VectorXd s2 = cfg.input_scale * encode_state(next, next_targets);

      buffer.push({s, action_id, r, s2, terminal});
      if (buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        const auto batch = buffer.sample(cfg.batch_size, replay_rng);
        train_step(net, target, batch, cfg.discount, cfg.learning_rate, cfg.gradient_clip);
      }
      ++global_step;
      if (global_step % cfg.target_sync_period == 0) sync_target(net, target);

      state = next;
      for (int m = 0; m < fleet; ++m) path[m].push_back(state.positions[m]);
      if (terminal) break;
    }

    const int flown = static_cast<int>(path[0].size()) - 1;
    Trajectory traj = Trajectory::zeros(fleet, flown);
    for (int m = 0; m < fleet; ++m)
      for (int n = 0; n <= flown; ++n) traj.at(m, n) = path[m][n];
    res.deviation_trace.push_back(centerline_deviation(traj, env.corridor));
    res.reward_trace.push_back(ep_reward);
    if (ep_reward > best_reward) {
      best_reward = ep_reward;
      res.best_episode = ep;
      res.best_params = params;
    }
  }
  res.net = std::move(net);
  return res;
}

}  // namespace aam
