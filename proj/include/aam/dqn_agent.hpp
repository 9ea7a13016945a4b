#pragma once

// Q-learning tuner for the per-eVTOL potential-field gains: a small dense
// action-value network with a lagged copy, uniform experience replay, and an
// episodic training loop over corridor flights.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "aam/cpf_flight.hpp"
#include "aam/sim_channel.hpp"

namespace aam {

// Dense rectifier network with a linear output layer.
struct QNetwork {
  std::vector<int> sizes;         // input, hidden..., output widths
  std::vector<MatrixXd> weights;  // weights[l]: sizes[l+1] x sizes[l]
  std::vector<VectorXd> biases;

  static QNetwork make(const std::vector<int>& layer_sizes, std::uint64_t seed);
  VectorXd forward(const VectorXd& input) const;
  int parameter_count() const;
};

struct Transition {
  VectorXd state;
  int action = 0;
  double reward = 0.0;
  VectorXd next_state;
  bool terminal = false;
};

// Fixed-capacity ring; sampling is uniform without replacement per batch.
struct ReplayBuffer {
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_ = 0;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

struct DQNConfig {
  double learning_rate = 1e-3;
  double discount = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.6;  // of episodes, linear decay window
  int batch_size = 64;
  int target_sync_period = 100;  // steps
  int episodes = 500;
  int steps_per_episode = 0;  // 0: one step per schedule slot
  double action_delta = 0.06;
  std::size_t buffer_capacity = 10000;
  double input_scale = 0.01;    // network preprocessing of meter-scale states
  double gradient_clip = 10.0;  // global gradient norm ceiling
  std::uint64_t seed = 0;
  void validate() const;
};

struct RewardParams {
  double alpha1 = 1.0;   // approach-speed weight
  double alpha2 = 0.01;  // per-meter distance emphasis
  double beta = -1.0;    // separation term weight; negative makes crowding costly
};

// One tuning move: nudge a single gain of a single eVTOL.
struct Action {
  int evtol = 0;
  int field = 0;         // 0: target, 1: separation, 2: communication
  double delta = 0.0;
};

// Target waypoint followed by per-eVTOL target offsets; length 3 + 3M.
VectorXd encode_state(const FlightState& state, const std::vector<Vector3d>& targets);

// All (eVTOL, field, delta) combinations with delta in {+d, -d, 0}; 9M total.
std::vector<Action> enumerate_actions(int evtols, double delta);

// Adds the action's delta to the chosen gain, clamped at zero below.
void apply_action(CPFParams& params, const Action& action);

// Per-eVTOL reward: approach speed scaled by remaining distance, separation
// escape term over in-band neighbors, and the fleet rate sum from the SINRs.
std::vector<double> reward(const FlightState& state, const std::vector<Vector3d>& targets,
                           const VectorXd& sinr, const RewardParams& rp,
                           const CPFParams& cpf);

// Mean squared error of predicted action values against fixed targets, and
// its exact gradient in the network parameters.
struct LossGradient {
  double loss = 0.0;
  std::vector<MatrixXd> weight_grads;
  std::vector<VectorXd> bias_grads;
};
LossGradient mse_loss_and_gradient(const QNetwork& net, const std::vector<VectorXd>& states,
                                   const std::vector<int>& actions,
                                   const std::vector<double>& targets);

// One descent step on the Bellman regression loss; returns that loss.
double train_step(QNetwork& net, const QNetwork& target_net,
                  const std::vector<Transition>& batch, double discount,
                  double learning_rate, double gradient_clip);

void sync_target(const QNetwork& net, QNetwork& target_net);

// Everything an episode needs: geometry for flying and the fixed
// transmission schedules for the rate part of the reward.
struct TrainingEnv {
  Corridor corridor;
  std::vector<Obstacle> obstacles;
  KinematicParams kinematics;
  CPFParams initial_params;
  PowerSchedule power;
  PhaseSchedule phases;
  SimGeometry geometry;
  StationConfig station;
  ChannelParams channel;
  RewardParams reward_params;
  bool use_rate_reward = true;
  FlightState start;  // episode start; empty: corridor entries at rest
};

struct TrainingResult {
  CPFParams best_params;                // gains at the best-reward episode's end
  int best_episode = -1;
  std::vector<double> reward_trace;     // fleet reward total per episode
  std::vector<double> deviation_trace;  // mean centerline deviation per episode
  QNetwork net;                         // trained network, reusable as a warm start
};

// Episodic epsilon-greedy training; deterministic for a fixed config seed.
TrainingResult run_training(const TrainingEnv& env, const DQNConfig& cfg,
                            const QNetwork* warm_start = nullptr);

}  // namespace aam
