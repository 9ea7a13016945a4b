#include "aam/cpf_flight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace aam {

namespace {

Vector3d segment_closest(const Vector3d& a, const Vector3d& b, const Vector3d& p,
                         double* t_out) {
  const Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  if (t_out) *t_out = t;
  return a + t * ab;
}

}  // namespace

double Corridor::total_length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < centerline.size(); ++i)
    s += (centerline[i] - centerline[i - 1]).norm();
  return s;
}

Vector3d Corridor::point_at(double arc) const {
  if (centerline.empty())
    throw std::invalid_argument("corridor.centerline: must not be empty");
  if (arc <= 0.0) return centerline.front();
  for (std::size_t i = 1; i < centerline.size(); ++i) {
    const double seg = (centerline[i] - centerline[i - 1]).norm();
    if (arc <= seg && seg > 0.0)
      return centerline[i - 1] + (arc / seg) * (centerline[i] - centerline[i - 1]);
    arc -= seg;
  }
  return centerline.back();
}

Corridor::Projection Corridor::project(const Vector3d& p) const {
  if (centerline.empty())
    throw std::invalid_argument("corridor.centerline: must not be empty");
  Projection best;
  best.distance = (p - centerline.front()).norm();
  best.closest = centerline.front();
  double walked = 0.0;
  for (std::size_t i = 1; i < centerline.size(); ++i) {
    double t = 0.0;
    const Vector3d c = segment_closest(centerline[i - 1], centerline[i], p, &t);
    const double d = (p - c).norm();
    const double seg = (centerline[i] - centerline[i - 1]).norm();
    if (d < best.distance) {
      best.distance = d;
      best.arc = walked + t * seg;
      best.closest = c;
    }
    walked += seg;
  }
  return best;
}

void Corridor::validate() const {
  if (!(radius > 0.0))
    throw std::invalid_argument("corridor.radius: must be positive (got " +
                                std::to_string(radius) + ")");
  if (centerline.size() < 2)
    throw std::invalid_argument("corridor.centerline: needs at least 2 points");
  if (entries.size() != exits.size())
    throw std::invalid_argument("corridor.entries: size must match corridor.exits");
  for (std::size_t m = 0; m < entries.size(); ++m) {
    if (project(entries[m]).distance > radius * (1.0 + 1e-9))
      throw std::invalid_argument("corridor.entries[" + std::to_string(m) +
                                  "]: outside the corridor tube");
    if (project(exits[m]).distance > radius * (1.0 + 1e-9))
      throw std::invalid_argument("corridor.exits[" + std::to_string(m) +
                                  "]: outside the corridor tube");
  }
}

void Obstacle::validate() const {
  if (!(radius > 0.0))
    throw std::invalid_argument("obstacle.radius: must be positive (got " +
                                std::to_string(radius) + ")");
}

CPFParams CPFParams::uniform(int evtols, double ktar, double ksep, double kcom) {
  CPFParams p;
  p.k_target.assign(evtols, ktar);
  p.k_separation.assign(evtols, ksep);
  p.k_communication.assign(evtols, kcom);
  return p;
}

void CPFParams::validate() const {
  if (k_target.size() != k_separation.size() || k_target.size() != k_communication.size())
    throw std::invalid_argument("cpf.k_target: gain lists must share one size");
  const auto check_gains = [](const std::vector<double>& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!(v[i] >= 0.0) || !std::isfinite(v[i]))
        throw std::invalid_argument(std::string("cpf.") + name + "[" +
                                    std::to_string(i) + "]: must be nonnegative");
  };
  check_gains(k_target, "k_target");
  check_gains(k_separation, "k_separation");
  check_gains(k_communication, "k_communication");
  if (!(d_separation > 0.0))
    throw std::invalid_argument("cpf.d_separation: must be positive");
  if (!(d_communication > 0.0))
    throw std::invalid_argument("cpf.d_communication: must be positive");
  if (!(d_communication <= d_maximum))
    throw std::invalid_argument("cpf.d_maximum: must be at least cpf.d_communication");
}

void KinematicParams::validate() const {
  if (!(slot_duration > 0.0))
    throw std::invalid_argument("kinematics.slot_duration: must be positive");
  if (!(max_speed > 0.0))
    throw std::invalid_argument("kinematics.max_speed: must be positive");
}

double target_potential(const Vector3d& q, const Vector3d& q_tar, double k_target) {
  return 0.5 * k_target * (q - q_tar).squaredNorm();
}

double separation_potential(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                            double k_separation, double d_separation) {
  double v = 0.0;
  for (const Vector3d& nb : neighbors) {
    const double d = (q - nb).norm();
    if (d > d_separation) continue;
    if (!(d > 0.0))
      throw std::invalid_argument("neighbors: coincident position (zero separation)");
    v += 0.5 * k_separation * (d_separation / d) * (d_separation / d);
  }
  return v;
}

double communication_potential(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                               double k_communication, double d_communication,
                               double d_maximum) {
  double v = 0.0;
  for (const Vector3d& nb : neighbors) {
    const double d = (q - nb).norm();
    if (d < d_communication || d > d_maximum) continue;
    v += 0.5 * k_communication * d * d;
  }
  return v;
}

Vector3d target_force(const Vector3d& q, const Vector3d& q_tar, double k_target) {
  return -k_target * (q - q_tar);
}

Vector3d separation_force(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                          double k_separation, double d_separation) {
  Vector3d f = Vector3d::Zero();
  for (const Vector3d& nb : neighbors) {
    const Vector3d diff = q - nb;
    const double d = diff.norm();
    if (d > d_separation) continue;
    if (!(d > 0.0))
      throw std::invalid_argument("neighbors: coincident position (zero separation)");
    f += (k_separation * d_separation * d_separation / (d * d * d * d)) * diff;
  }
  return f;
}

Vector3d communication_force(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                             double k_communication, double d_communication,
                             double d_maximum) {
  Vector3d f = Vector3d::Zero();
  for (const Vector3d& nb : neighbors) {
    const Vector3d diff = q - nb;
    const double d = diff.norm();
    if (d < d_communication || d > d_maximum) continue;
    f -= k_communication * diff;
  }
  return f;
}

std::vector<Vector3d> composite_acceleration(const FlightState& state, const CPFParams& params,
                                             const std::vector<Vector3d>& targets,
                                             const std::vector<Obstacle>& obstacles) {
  const std::size_t fleet = state.positions.size();
  if (params.k_target.size() != fleet)
    throw std::invalid_argument("params.k_target: size must match the fleet");
  if (targets.size() != fleet)
    throw std::invalid_argument("targets: size must match the fleet");
  std::vector<Vector3d> acc(fleet);
  std::vector<Vector3d> others;
  for (std::size_t i = 0; i < fleet; ++i) {
    others.clear();
    for (std::size_t j = 0; j < fleet; ++j)
      if (j != i) others.push_back(state.positions[j]);
    const Vector3d& q = state.positions[i];
    Vector3d f = target_force(q, targets[i], params.k_target[i]);
    f += separation_force(q, others, params.k_separation[i], params.d_separation);
    f += communication_force(q, others, params.k_communication[i],
                             params.d_communication, params.d_maximum);
    for (const Obstacle& ob : obstacles)
      f += separation_force(q, {ob.center}, params.k_separation[i],
                            params.d_separation + ob.radius);
    acc[i] = f;
  }
  return acc;
}

FlightState step_kinematics(const FlightState& state, const std::vector<Vector3d>& accelerations,
                            const KinematicParams& kin, const Corridor& corridor) {
  if (accelerations.size() != state.positions.size())
    throw std::invalid_argument("accelerations: size must match the fleet");
  if (state.velocities.size() != state.positions.size())
    throw std::invalid_argument("state.velocities: size must match state.positions");
  const double dt = kin.slot_duration;
  const double speed_cap = kin.max_speed * (1.0 - 1e-12);
  const double disp_cap = kin.max_speed * dt * (1.0 - 1e-12);

  FlightState out = state;
  out.slot = state.slot + 1;
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    Vector3d v = state.velocities[i] + accelerations[i] * dt;
    const double speed = v.norm();
    if (speed > speed_cap) v *= speed_cap / speed;
    Vector3d q = state.positions[i] + v * dt;

    // A feasible previous position satisfies both limits, so alternating
    // the two pullbacks settles (usually in one pass). Starting from an
    // infeasible position the displacement limit cannot also hold, so only
    // containment is enforced there.
    const Vector3d& prev = state.positions[i];
    const bool prev_inside = corridor.project(prev).distance <= corridor.radius;
    for (int guard = 0; guard < 64; ++guard) {
      bool ok = true;
      const Corridor::Projection pr = corridor.project(q);
      if (pr.distance > corridor.radius) {
        const Vector3d radial = (q - pr.closest) / pr.distance;
        q = pr.closest + radial * (corridor.radius * (1.0 - 1e-12));
        v -= radial * radial.dot(v);
        ok = false;
      }
      const Vector3d step = q - prev;
      const double disp = step.norm();
      if (prev_inside && disp > kin.max_speed * dt) {
        q = prev + step * (disp_cap / disp);
        ok = false;
      }
      if (ok) break;
      if (guard == 63 && prev_inside) {
        q = prev;
        v = Vector3d::Zero();
      }
    }
    out.positions[i] = q;
    out.velocities[i] = v;
  }
  return out;
}

double centerline_deviation(const Trajectory& traj, const Corridor& corridor) {
  if (traj.num_evtols <= 0 || traj.num_slots < 0 || traj.q.empty())
    throw std::invalid_argument("trajectory: must not be empty");
  double sum = 0.0;
  for (int m = 0; m < traj.num_evtols; ++m)
    for (int n = 0; n <= traj.num_slots; ++n)
      sum += corridor.project(traj.at(m, n)).distance;
  return sum / (static_cast<double>(traj.num_evtols) * (traj.num_slots + 1));
}

std::vector<double> collision_penalty(const std::vector<Vector3d>& positions,
                                      double c1, double c2) {
  const std::size_t fleet = positions.size();
  std::vector<double> s(fleet, 0.0);
  for (std::size_t m = 0; m < fleet; ++m)
    for (std::size_t k = 0; k < fleet; ++k) {
      if (k == m) continue;
      const double d = (positions[m] - positions[k]).norm();
      s[m] += (1.0 - std::exp(c1 + c2 * d)) / static_cast<double>(fleet);
    }
  return s;
}

Vector3d moving_target(const Corridor& corridor, const Vector3d& position, int evtol,
                       const KinematicParams& kin) {
  if (evtol < 0 || evtol >= static_cast<int>(corridor.exits.size()))
    throw std::invalid_argument("evtol: index outside the corridor exit list");
  const double ahead =
      corridor.project(position).arc + 2.0 * kin.max_speed * kin.slot_duration;
  if (ahead >= corridor.total_length()) return corridor.exits[evtol];
  return corridor.point_at(ahead);
}

}  // namespace aam
