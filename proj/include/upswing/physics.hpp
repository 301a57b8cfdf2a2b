#pragma once

#include <array>
#include <cstddef>

namespace upswing::physics {

// Generalized positions and velocities of a 2-DOF system.
// Cartpole: q = [cart position x (m); pole angle theta (rad)].
// Double pendulum: q = [theta1 (rad, from hanging vertical); theta2 (rad, relative to link 1)].
// Angle convention everywhere: 0 = hanging down, counter-clockwise positive,
// so the upright targets are theta = +-pi (cartpole) and q = [+-pi; 0].
struct SystemState {
  std::array<double, 2> q{0.0, 0.0};
  std::array<double, 2> qdot{0.0, 0.0};

  bool operator==(const SystemState&) const = default;
};

bool is_finite(const SystemState& s);

// Time derivative (qdot, qddot) of a SystemState.
struct StateDerivative {
  std::array<double, 2> qdot{0.0, 0.0};
  std::array<double, 2> qddot{0.0, 0.0};
};

// Cart on a frictionless-pivot pole, pole modeled as a point mass at the tip.
struct CartpoleParams {
  double cart_mass_kg = 0.5;
  double pole_mass_kg = 0.1;
  double pole_length_m = 0.5;
  double gravity_mps2 = 9.81;
  double cart_friction_Nspm = 0.0;  // viscous, >= 0
  double u_max_N = 2.5;
};

enum class Actuation { Pendubot, Acrobot };  // torque at joint 1 / joint 2

// Planar 2-link pendulum, inertias about the link centers of mass.
struct DoublePendulumParams {
  double m1_kg = 0.5;
  double m2_kg = 0.5;
  double l1_m = 0.3;
  double l2_m = 0.2;
  double r1_m = 0.15;   // pivot -> COM of link 1
  double r2_m = 0.1;    // joint 2 -> COM of link 2
  double I1_kgm2 = 0.00375;
  double I2_kgm2 = 0.5 * 0.2 * 0.2 / 12.0;
  double b1_Nms = 0.005;
  double b2_Nms = 0.005;
  double gravity_mps2 = 9.81;
  double tau_max_Nm = 3.0;
  Actuation actuation = Actuation::Pendubot;
};

void validate(const CartpoleParams& p);
void validate(const DoublePendulumParams& p);

enum class IntegratorMethod { RK4, SemiImplicitEuler };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::RK4;
  double dt_s = 0.01;       // one control timestep
  int substeps = 5;         // internal integrator steps per control step
  double state_bound = 1e6; // divergence guard on |q|, |qdot|
};

// (qdot, qddot) under the cart-pole model; force in N applied to the cart.
// The caller clamps |force| to u_max.
StateDerivative cartpole_derivative(const SystemState& state, double force,
                                    const CartpoleParams& params);

// (qdot, qddot) under the manipulator equations M(q)qdd + C(q,qd)qd + G(q) + B qd = tau.
// The torque goes to the joint selected by params.actuation; the other joint is passive.
StateDerivative double_pendulum_derivative(const SystemState& state, double torque,
                                           const DoublePendulumParams& params);

// Advance one control timestep (integ.substeps internal steps, control held constant).
// Deterministic: identical inputs give bit-identical outputs.
// Throws DivergenceError when any state component leaves [-state_bound, state_bound].
SystemState step(const SystemState& state, double force, const CartpoleParams& params,
                 const IntegratorConfig& integ);
SystemState step(const SystemState& state, double torque, const DoublePendulumParams& params,
                 const IntegratorConfig& integ);

// Kinetic energy T >= 0 and potential V >= 0 with V = 0 at the hanging rest configuration.
struct Energy {
  double kinetic_J = 0.0;
  double potential_J = 0.0;
  double total() const { return kinetic_J + potential_J; }
};

Energy mechanical_energy(const SystemState& state, const CartpoleParams& params);
Energy mechanical_energy(const SystemState& state, const DoublePendulumParams& params);

// y = -l1 cos(theta1) - l2 cos(theta1 + theta2); equals l1+l2 at upright.
double end_effector_height(const SystemState& state, const DoublePendulumParams& params);

// Pole tip p = [x + l sin(theta); -l cos(theta)], so the upright tip is [0; l]
// at (x=0, theta=+-pi).
std::array<double, 2> pole_tip(const SystemState& state, const CartpoleParams& params);

}  // namespace upswing::physics
