#pragma once

// Corridor-constrained flight dynamics: attraction to a moving waypoint,
// short-range separation, communication-range keeping, and a speed-clamped
// integrator that keeps every position inside the corridor tube.

#include <vector>

#include <Eigen/Dense>

#include "aam/sim_channel.hpp"

namespace aam {

// Tube of fixed radius around a 3-D polyline centerline, with one entry and
// one exit point per eVTOL.
struct Corridor {
  std::vector<Vector3d> centerline;
  double radius = 0.0;
  std::vector<Vector3d> entries;
  std::vector<Vector3d> exits;

  struct Projection {
    double distance = 0.0;  // point to closest centerline point
    double arc = 0.0;       // arc length of the closest point
    Vector3d closest = Vector3d::Zero();
  };

  double total_length() const;
  // Centerline point at the given arc length, clamped to [0, total_length].
  Vector3d point_at(double arc) const;
  Projection project(const Vector3d& p) const;
  void validate() const;
};

struct Obstacle {
  Vector3d center = Vector3d::Zero();
  double radius = 0.0;
  void validate() const;
};

// Field gains are per eVTOL (the learning loop tunes them individually);
// the distance bands are shared.
struct CPFParams {
  std::vector<double> k_target;
  std::vector<double> k_separation;
  std::vector<double> k_communication;
  double d_separation = 20.0;    // m, repulsion band
  double d_communication = 60.0; // m, attraction window lower edge
  double d_maximum = 120.0;      // m, attraction window upper edge

  static CPFParams uniform(int evtols, double ktar, double ksep, double kcom);
  void validate() const;
};

struct KinematicParams {
  double slot_duration = 1.0;  // s
  double max_speed = 20.0;     // m/s
  void validate() const;
};

struct FlightState {
  std::vector<Vector3d> positions;
  std::vector<Vector3d> velocities;
  int slot = 0;
};

// Scalar potentials; each force below is the exact negative gradient of its
// potential with respect to the first argument.
double target_potential(const Vector3d& q, const Vector3d& q_tar, double k_target);
double separation_potential(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                            double k_separation, double d_separation);
double communication_potential(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                               double k_communication, double d_communication,
                               double d_maximum);

Vector3d target_force(const Vector3d& q, const Vector3d& q_tar, double k_target);
// Repulsion from neighbors closer than d_separation; rejects coincident points.
Vector3d separation_force(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                          double k_separation, double d_separation);
// Attraction toward neighbors drifting through [d_communication, d_maximum].
Vector3d communication_force(const Vector3d& q, const std::vector<Vector3d>& neighbors,
                             double k_communication, double d_communication,
                             double d_maximum);

// Per-eVTOL force sum; obstacles repel through the separation field as
// static virtual agents with d_separation inflated by the obstacle radius.
std::vector<Vector3d> composite_acceleration(const FlightState& state, const CPFParams& params,
                                             const std::vector<Vector3d>& targets,
                                             const std::vector<Obstacle>& obstacles);

// Semi-implicit Euler with speed clamping; positions leaving the tube are
// projected back onto the boundary with the radial velocity zeroed. The
// returned state always satisfies the displacement and containment limits.
FlightState step_kinematics(const FlightState& state, const std::vector<Vector3d>& accelerations,
                            const KinematicParams& kin, const Corridor& corridor);

// Mean distance to the centerline over every recorded position.
double centerline_deviation(const Trajectory& traj, const Corridor& corridor);

// Proximity penalty per eVTOL: sum over others of (1 - e^{c1 + c2 d}) / M.
std::vector<double> collision_penalty(const std::vector<Vector3d>& positions,
                                      double c1, double c2);

// Waypoint two cruise slots ahead of the eVTOL's centerline progress; once
// the lookahead passes the end of the centerline the exit point takes over.
Vector3d moving_target(const Corridor& corridor, const Vector3d& position, int evtol,
                       const KinematicParams& kin);

}  // namespace aam
