#include "aam/sim_channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace aam {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Propagation coefficient from a source patch to a point at axial gap dz and
// lateral offset lat: (area * cos(chi) / d) * (1/(2*pi*d) - j/lambda) * e^{j*2*pi*d/lambda}.
cplx patch_coupling(double area, double dz, double lat_sq, double lambda) {
  const double d = std::sqrt(dz * dz + lat_sq);
  const double cos_chi = dz / d;
  const cplx radial(1.0 / (kTwoPi * d), -1.0 / lambda);
  const double phase = kTwoPi * d / lambda;
  return (area * cos_chi / d) * radial * cplx(std::cos(phase), std::sin(phase));
}
}  // namespace

int SimGeometry::grid_side() const {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(atoms_per_layer))));
  return side;
}

Eigen::Vector2d SimGeometry::atom_lateral(int k) const {
  const int side = grid_side();
  const int ix = k % side;
  const int iy = k / side;
  const double half = 0.5 * (side - 1);
  return {(ix - half) * atom_size_x, (iy - half) * atom_size_y};
}

Vector3d SimGeometry::antenna_position(int m) const {
  const double half = 0.5 * (num_antennas - 1);
  return {(m - half) * 0.5 * wavelength, 0.0, 0.0};
}

void SimGeometry::validate() const {
  if (num_layers < 1) throw std::invalid_argument("geometry.num_layers: must be >= 1");
  if (atoms_per_layer < 1) throw std::invalid_argument("geometry.atoms_per_layer: must be >= 1");
  const int side = grid_side();
  if (side * side != atoms_per_layer)
    throw std::invalid_argument("geometry.atoms_per_layer: must be a perfect square (got " +
                                std::to_string(atoms_per_layer) + ")");
  if (!(wavelength > 0.0)) throw std::invalid_argument("geometry.wavelength: must be > 0");
  if (!(thickness > 0.0)) throw std::invalid_argument("geometry.thickness: must be > 0");
  if (!(atom_size_x > 0.0) || !(atom_size_y > 0.0))
    throw std::invalid_argument("geometry.atom_size: must be > 0");
  if (num_antennas < 1) throw std::invalid_argument("geometry.num_antennas: must be >= 1");
}

void ChannelParams::validate() const {
  if (!(ref_path_loss > 0.0)) throw std::invalid_argument("channel.ref_path_loss: must be > 0");
  if (!(path_loss_exponent > 0.0))
    throw std::invalid_argument("channel.path_loss_exponent: must be > 0");
  if (!(rician_factor >= 0.0)) throw std::invalid_argument("channel.rician_factor: must be >= 0");
  if (!(noise_power > 0.0)) throw std::invalid_argument("channel.noise_power: must be > 0");
}

PhaseSchedule PhaseSchedule::zeros(int slots, int layers, int atoms) {
  PhaseSchedule ps;
  ps.num_slots = slots;
  ps.num_layers = layers;
  ps.num_atoms = atoms;
  ps.theta.assign(static_cast<std::size_t>(slots) * layers * atoms, 0.0);
  return ps;
}

PhaseSchedule PhaseSchedule::random(int slots, int layers, int atoms, std::uint64_t seed) {
  PhaseSchedule ps = zeros(slots, layers, atoms);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, kTwoPi);
  for (double& t : ps.theta) t = dist(rng);
  return ps;
}

void PhaseSchedule::validate() const {
  if (theta.size() != static_cast<std::size_t>(num_slots) * num_layers * num_atoms)
    throw std::invalid_argument("phases: size mismatch");
  for (double t : theta)
    if (!(t >= 0.0) || !(t < kTwoPi))
      throw std::invalid_argument("phases: entries must lie in [0, 2*pi)");
}

PowerSchedule PowerSchedule::uniform(int slots, int evtols, double per_evtol) {
  PowerSchedule p;
  p.num_slots = slots;
  p.num_evtols = evtols;
  p.p.assign(static_cast<std::size_t>(slots) * evtols, per_evtol);
  return p;
}

double PowerSchedule::slot_sum(int n) const {
  double s = 0.0;
  for (int m = 0; m < num_evtols; ++m) s += at(n, m);
  return s;
}

void PowerSchedule::validate() const {
  if (p.size() != static_cast<std::size_t>(num_slots) * num_evtols)
    throw std::invalid_argument("power: size mismatch");
  for (double v : p)
    if (!(v >= 0.0)) throw std::invalid_argument("power: entries must be >= 0");
}

Trajectory Trajectory::zeros(int evtols, int slots) {
  Trajectory t;
  t.num_evtols = evtols;
  t.num_slots = slots;
  t.q.assign(static_cast<std::size_t>(evtols) * (slots + 1), Vector3d::Zero());
  return t;
}

EffectiveGains EffectiveGains::zeros(int slots, int evtols) {
  EffectiveGains g;
  g.num_slots = slots;
  g.num_evtols = evtols;
  g.g.assign(static_cast<std::size_t>(slots) * evtols * evtols, 0.0);
  return g;
}

MatrixXcd build_inter_layer(const SimGeometry& g) {
  g.validate();
  const int K = g.atoms_per_layer;
  const double area = g.atom_size_x * g.atom_size_y;
  const double dz = g.layer_spacing();
  MatrixXcd w(K, K);
  for (int dst = 0; dst < K; ++dst) {
    const Eigen::Vector2d pd = g.atom_lateral(dst);
    for (int src = 0; src < K; ++src) {
      const Eigen::Vector2d ps = g.atom_lateral(src);
      w(dst, src) = patch_coupling(area, dz, (pd - ps).squaredNorm(), g.wavelength);
    }
  }
  return w;
}

std::vector<VectorXcd> build_feed_vectors(const SimGeometry& g) {
  g.validate();
  const int K = g.atoms_per_layer;
  const double area = g.atom_size_x * g.atom_size_y;
  std::vector<VectorXcd> feeds(g.num_antennas, VectorXcd(K));
  for (int m = 0; m < g.num_antennas; ++m) {
    const Vector3d ant = g.antenna_position(m);
    for (int k = 0; k < K; ++k) {
      const Eigen::Vector2d lat = g.atom_lateral(k);
      const double dx = lat.x() - ant.x();
      const double dy = lat.y() - ant.y();
      feeds[m](k) = patch_coupling(area, g.wavelength, dx * dx + dy * dy, g.wavelength);
    }
  }
  return feeds;
}

MatrixXcd cascade_beamforming(const PhaseSchedule& ps, int slot, const MatrixXcd& inter_layer) {
  const int K = ps.num_atoms;
  if (inter_layer.rows() != K || inter_layer.cols() != K)
    throw std::invalid_argument("cascade: inter-layer matrix size mismatch");
  MatrixXcd g = MatrixXcd::Identity(K, K);
  for (int l = 0; l < ps.num_layers; ++l) {
    if (l > 0) g = inter_layer * g;
    for (int k = 0; k < K; ++k) {
      const double t = ps.at(slot, l, k);
      g.row(k) *= cplx(std::cos(t), std::sin(t));
    }
  }
  return g;
}

VectorXcd air_ground_channel(const Vector3d& pos, const StationConfig& st,
                             const ChannelParams& cp, int num_atoms) {
  const double d = (pos - st.position).norm();
  if (!(d > 0.0)) throw std::invalid_argument("channel: eVTOL position coincides with the station");
  const double amp = std::sqrt(cp.ref_path_loss / std::pow(d, cp.path_loss_exponent)) *
                     std::sqrt(cp.rician_factor / (cp.rician_factor + 1.0));
  return VectorXcd::Constant(num_atoms, cplx(amp, 0.0));
}

LinkContext build_link_context(const Trajectory& traj, const SimGeometry& g,
                               const StationConfig& st, const ChannelParams& cp) {
  cp.validate();
  LinkContext ctx;
  ctx.num_slots = traj.num_slots;
  ctx.num_evtols = traj.num_evtols;
  ctx.num_layers = g.num_layers;
  ctx.num_atoms = g.atoms_per_layer;
  ctx.noise_power = cp.noise_power;
  ctx.inter_layer = build_inter_layer(g);
  ctx.feeds = build_feed_vectors(g);
  if (g.num_antennas != traj.num_evtols)
    throw std::invalid_argument("geometry.num_antennas: must equal the eVTOL count");
  ctx.h.resize(traj.num_slots);
  for (int n = 1; n <= traj.num_slots; ++n) {
    ctx.h[n - 1].reserve(traj.num_evtols);
    for (int m = 0; m < traj.num_evtols; ++m)
      ctx.h[n - 1].push_back(air_ground_channel(traj.at(m, n), st, cp, g.atoms_per_layer));
  }
  return ctx;
}

EffectiveGains effective_gains(const LinkContext& ctx, const PhaseSchedule& ps) {
  const int M = ctx.num_evtols;
  EffectiveGains out = EffectiveGains::zeros(ctx.num_slots, M);
  for (int n = 0; n < ctx.num_slots; ++n) {
    const MatrixXcd g = cascade_beamforming(ps, n, ctx.inter_layer);
    for (int tx = 0; tx < M; ++tx) {
      const cplx c = ctx.h[n][tx].adjoint() * g * ctx.feeds[tx];
      const double q = std::norm(c);
      for (int rx = 0; rx < M; ++rx) out.at(n, rx, tx) = q;
    }
  }
  return out;
}

EffectiveGains mimo_effective_gains(const Trajectory& traj, const StationConfig& st,
                                    const ChannelParams& cp) {
  cp.validate();
  EffectiveGains out = EffectiveGains::zeros(traj.num_slots, traj.num_evtols);
  for (int n = 1; n <= traj.num_slots; ++n)
    for (int rx = 0; rx < traj.num_evtols; ++rx) {
      const double d = (traj.at(rx, n) - st.position).norm();
      if (!(d > 0.0)) throw std::invalid_argument("channel: eVTOL position coincides with the station");
      const double g = cp.ref_path_loss / std::pow(d, cp.path_loss_exponent) *
                       (cp.rician_factor / (cp.rician_factor + 1.0));
      for (int tx = 0; tx < traj.num_evtols; ++tx) out.at(n - 1, rx, tx) = g;
    }
  return out;
}

RateTable sinr_and_rates(const EffectiveGains& g, const PowerSchedule& p, double noise_power) {
  if (g.num_slots != p.num_slots || g.num_evtols != p.num_evtols)
    throw std::invalid_argument("rates: gain and power dimensions mismatch");
  if (!(noise_power > 0.0)) throw std::invalid_argument("rates: noise power must be > 0");
  RateTable rt;
  rt.sinr.setZero(g.num_slots, g.num_evtols);
  rt.rate.setZero(g.num_slots, g.num_evtols);
  for (int n = 0; n < g.num_slots; ++n)
    for (int rx = 0; rx < g.num_evtols; ++rx) {
      double interference = 0.0;
      for (int tx = 0; tx < g.num_evtols; ++tx)
        if (tx != rx) interference += g.at(n, rx, tx) * p.at(n, tx);
      const double s = g.at(n, rx, rx) * p.at(n, rx) / (interference + noise_power);
      rt.sinr(n, rx) = s;
      rt.rate(n, rx) = std::log1p(s);
    }
  return rt;
}

RateTable mimo_baseline_rate(const Trajectory& traj, const PowerSchedule& p,
                             const StationConfig& st, const ChannelParams& cp) {
  return sinr_and_rates(mimo_effective_gains(traj, st, cp), p, cp.noise_power);
}

}  // namespace aam
