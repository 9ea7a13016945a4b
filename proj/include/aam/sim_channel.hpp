#pragma once

// Air-ground link model: stacked-metasurface transmitter, line-of-sight
// fading, per-slot beam gains and achievable rates (natural log, nats).

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace aam {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Transmitter stack geometry. Layers are square atom grids parallel to the
// x-y plane, centered on the z axis, spaced thickness/num_layers apart;
// the antenna row sits one wavelength below the first layer.
struct SimGeometry {
  int num_layers = 5;
  int atoms_per_layer = 4;  // must be a perfect square
  double wavelength = 0.01;         // m
  double thickness = 0.05;          // m, full stack depth
  double atom_size_x = 0.005;       // m, also the grid pitch
  double atom_size_y = 0.005;       // m
  int num_antennas = 3;             // one antenna per served eVTOL

  double layer_spacing() const { return thickness / num_layers; }
  int grid_side() const;
  // Lateral (x, y) center of atom k; the grid is centered on the origin.
  Eigen::Vector2d atom_lateral(int k) const;
  // Antenna m center: a row along x at half-wavelength pitch, centered.
  Vector3d antenna_position(int m) const;
  void validate() const;
};

struct StationConfig {
  Vector3d position = Vector3d::Zero();  // channel reference point
};

// Linear-scale channel constants (powers in mW).
struct ChannelParams {
  double ref_path_loss = 1e-3;      // gain at 1 m
  double path_loss_exponent = 2.0;
  double rician_factor = 10.0;
  double noise_power = 1e-9;        // mW
  void validate() const;
};

// Per-slot phase shifts, [slot][layer][atom], each in [0, 2*pi).
struct PhaseSchedule {
  int num_slots = 0, num_layers = 0, num_atoms = 0;
  std::vector<double> theta;

  static PhaseSchedule zeros(int slots, int layers, int atoms);
  static PhaseSchedule random(int slots, int layers, int atoms, std::uint64_t seed);
  double& at(int n, int l, int k) { return theta[(static_cast<std::size_t>(n) * num_layers + l) * num_atoms + k]; }
  double at(int n, int l, int k) const { return theta[(static_cast<std::size_t>(n) * num_layers + l) * num_atoms + k]; }
  void validate() const;
};

// Per-slot transmit powers, [slot][evtol], mW, nonnegative.
struct PowerSchedule {
  int num_slots = 0, num_evtols = 0;
  std::vector<double> p;

  static PowerSchedule uniform(int slots, int evtols, double per_evtol);
  double& at(int n, int m) { return p[static_cast<std::size_t>(n) * num_evtols + m]; }
  double at(int n, int m) const { return p[static_cast<std::size_t>(n) * num_evtols + m]; }
  double slot_sum(int n) const;
  void validate() const;
};

// Per-eVTOL positions over slots 0..num_slots (num_slots+1 points each).
struct Trajectory {
  int num_evtols = 0, num_slots = 0;
  std::vector<Vector3d> q;

  static Trajectory zeros(int evtols, int slots);
  Vector3d& at(int m, int n) { return q[static_cast<std::size_t>(m) * (num_slots + 1) + n]; }
  const Vector3d& at(int m, int n) const { return q[static_cast<std::size_t>(m) * (num_slots + 1) + n]; }
};

// Receiver-by-transmitter beam power gains per slot: entry (rx, tx) is the
// gain the transmission intended for tx presents in rx's rate expression.
struct EffectiveGains {
  int num_slots = 0, num_evtols = 0;
  std::vector<double> g;

  static EffectiveGains zeros(int slots, int evtols);
  double& at(int n, int rx, int tx) { return g[(static_cast<std::size_t>(n) * num_evtols + rx) * num_evtols + tx]; }
  double at(int n, int rx, int tx) const { return g[(static_cast<std::size_t>(n) * num_evtols + rx) * num_evtols + tx]; }
};

// Diffraction coupling between consecutive layers; entry (dst, src).
// Identical layer layouts make one matrix serve every layer pair.
MatrixXcd build_inter_layer(const SimGeometry& g);

// Antenna-to-first-layer coupling, one vector per antenna, same propagation
// law as the inter-layer matrix.
std::vector<VectorXcd> build_feed_vectors(const SimGeometry& g);

// Cascaded stack response for one slot:
// diag(e^{j theta_L}) W ... W diag(e^{j theta_1}).
MatrixXcd cascade_beamforming(const PhaseSchedule& ps, int slot, const MatrixXcd& inter_layer);

// Line-of-sight fading vector at distance ||pos - station||; all atoms see
// the same coefficient.
VectorXcd air_ground_channel(const Vector3d& pos, const StationConfig& st,
                             const ChannelParams& cp, int num_atoms);

// Slot-indexed channel bundle shared by the solvers (slots 1..N).
struct LinkContext {
  int num_slots = 0, num_evtols = 0, num_layers = 0, num_atoms = 0;
  std::vector<std::vector<VectorXcd>> h;  // [slot-1][evtol]
  std::vector<VectorXcd> feeds;
  MatrixXcd inter_layer;
  double noise_power = 0.0;
};

LinkContext build_link_context(const Trajectory& traj, const SimGeometry& g,
                               const StationConfig& st, const ChannelParams& cp);

// Beam gains for every slot under the given phases.
EffectiveGains effective_gains(const LinkContext& ctx, const PhaseSchedule& ps);

// Scalar-channel gains (no stack): entry (rx, tx) = |h_rx|^2.
EffectiveGains mimo_effective_gains(const Trajectory& traj, const StationConfig& st,
                                    const ChannelParams& cp);

struct RateTable {
  MatrixXd sinr;  // N x M
  MatrixXd rate;  // N x M, nats
  double total() const { return rate.sum(); }
};

// SINR and rate per slot and eVTOL from gains and powers.
RateTable sinr_and_rates(const EffectiveGains& g, const PowerSchedule& p, double noise_power);

// Benchmark rate of the plain multi-antenna link (scalar gains, no stack).
RateTable mimo_baseline_rate(const Trajectory& traj, const PowerSchedule& p,
                             const StationConfig& st, const ChannelParams& cp);

}  // namespace aam
