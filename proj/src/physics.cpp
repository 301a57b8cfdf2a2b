#include "upswing/physics.hpp"

#include <cmath>
#include <string>

#include "upswing/errors.hpp"

namespace upswing::physics {

bool is_finite(const SystemState& s) {
  return std::isfinite(s.q[0]) && std::isfinite(s.q[1]) && std::isfinite(s.qdot[0]) &&
         std::isfinite(s.qdot[1]);
}

void validate(const CartpoleParams& p) {
  if (!(p.cart_mass_kg > 0.0) || !(p.pole_mass_kg > 0.0) || !(p.pole_length_m > 0.0))
    throw ConfigError("cartpole: masses and pole length must be positive");
  if (!(p.u_max_N > 0.0)) throw ConfigError("cartpole: u_max must be positive");
  if (p.cart_friction_Nspm < 0.0) throw ConfigError("cartpole: friction must be >= 0");
  if (!std::isfinite(p.gravity_mps2)) throw ConfigError("cartpole: non-finite gravity");
}

void validate(const DoublePendulumParams& p) {
  if (!(p.m1_kg > 0.0 && p.m2_kg > 0.0 && p.l1_m > 0.0 && p.l2_m > 0.0 && p.r1_m > 0.0 &&
        p.r2_m > 0.0 && p.I1_kgm2 > 0.0 && p.I2_kgm2 > 0.0))
    throw ConfigError("double pendulum: masses, lengths, inertias must be positive");
  if (p.b1_Nms < 0.0 || p.b2_Nms < 0.0) throw ConfigError("double pendulum: damping must be >= 0");
  if (!(p.tau_max_Nm > 0.0)) throw ConfigError("double pendulum: tau_max must be positive");
}

StateDerivative cartpole_derivative(const SystemState& state, double force,
                                    const CartpoleParams& params) {
  if (!is_finite(state) || !std::isfinite(force))
    throw DomainError("cartpole_derivative: non-finite input");

  const double mc = params.cart_mass_kg;
  const double mp = params.pole_mass_kg;
  const double l = params.pole_length_m;
  const double g = params.gravity_mps2;

  const double theta = state.q[1];
  const double xdot = state.qdot[0];
  const double thetadot = state.qdot[1];
  const double s = std::sin(theta);
  const double c = std::cos(theta);

  // Lagrangian dynamics of a point mass mp at distance l from the pivot,
  // theta = 0 hanging down:
  //   (mc+mp) xdd + mp l (c thdd - s thd^2) = F - friction*xdot
  //   c xdd + l thdd + g s = 0
  const double f = force - params.cart_friction_Nspm * xdot;
  const double xddot = (f + mp * s * (g * c + l * thetadot * thetadot)) / (mc + mp * s * s);
  const double thetaddot = -(c * xddot + g * s) / l;

  StateDerivative d;
  d.qdot = state.qdot;
  d.qddot = {xddot, thetaddot};
  return d;
}

StateDerivative double_pendulum_derivative(const SystemState& state, double torque,
                                           const DoublePendulumParams& params) {
  if (!is_finite(state) || !std::isfinite(torque))
    throw DomainError("double_pendulum_derivative: non-finite input");

  const double m1 = params.m1_kg, m2 = params.m2_kg;
  const double l1 = params.l1_m;
  const double r1 = params.r1_m, r2 = params.r2_m;
  const double g = params.gravity_mps2;

  const double th1 = state.q[0], th2 = state.q[1];
  const double w1 = state.qdot[0], w2 = state.qdot[1];
  const double s2 = std::sin(th2), c2 = std::cos(th2);

  // M(q) with inertias about the COMs.
  const double alpha = params.I1_kgm2 + params.I2_kgm2 + m1 * r1 * r1 + m2 * (l1 * l1 + r2 * r2);
  const double beta = m2 * l1 * r2;
  const double delta = params.I2_kgm2 + m2 * r2 * r2;
  const double m11 = alpha + 2.0 * beta * c2;
  const double m12 = delta + beta * c2;
  const double m22 = delta;

  // Coriolis/centrifugal and gravity (theta = 0 hanging down).
  const double c1 = -beta * s2 * (2.0 * w1 * w2 + w2 * w2);
  const double cor2 = beta * s2 * w1 * w1;
  const double g1 = (m1 * r1 + m2 * l1) * g * std::sin(th1) + m2 * r2 * g * std::sin(th1 + th2);
  const double g2 = m2 * r2 * g * std::sin(th1 + th2);

  const double tau1 = (params.actuation == Actuation::Pendubot) ? torque : 0.0;
  const double tau2 = (params.actuation == Actuation::Acrobot) ? torque : 0.0;

  const double rhs1 = tau1 - c1 - g1 - params.b1_Nms * w1;
  const double rhs2 = tau2 - cor2 - g2 - params.b2_Nms * w2;

  // M is positive definite for physically valid params.
  const double det = m11 * m22 - m12 * m12;
  if (!(det > 0.0)) throw DomainError("double_pendulum_derivative: singular mass matrix");

  StateDerivative d;
  d.qdot = state.qdot;
  d.qddot = {(m22 * rhs1 - m12 * rhs2) / det, (m11 * rhs2 - m12 * rhs1) / det};
  return d;
}

namespace {

using Vec4 = std::array<double, 4>;

Vec4 pack(const SystemState& s) { return {s.q[0], s.q[1], s.qdot[0], s.qdot[1]}; }

SystemState unpack(const Vec4& y) { return {{y[0], y[1]}, {y[2], y[3]}}; }

template <class DerivFn>
Vec4 rk4_step(const Vec4& y, double h, DerivFn&& f) {
  const Vec4 k1 = f(y);
  Vec4 y2;
  for (int i = 0; i < 4; ++i) y2[i] = y[i] + 0.5 * h * k1[i];
  const Vec4 k2 = f(y2);
  Vec4 y3;
  for (int i = 0; i < 4; ++i) y3[i] = y[i] + 0.5 * h * k2[i];
  const Vec4 k3 = f(y3);
  Vec4 y4;
  for (int i = 0; i < 4; ++i) y4[i] = y[i] + h * k3[i];
  const Vec4 k4 = f(y4);
  Vec4 out;
  for (int i = 0; i < 4; ++i)
    out[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <class Params, class DerivOp>
SystemState integrate(const SystemState& state, double control, const Params& params,
                      const IntegratorConfig& integ, DerivOp&& deriv_op) {
  if (!(integ.dt_s > 0.0) || integ.substeps < 1)
    throw ConfigError("integrator: dt must be > 0 and substeps >= 1");

  const auto f = [&](const Vec4& y) -> Vec4 {
    const StateDerivative d = deriv_op(unpack(y), control, params);
    return {d.qdot[0], d.qdot[1], d.qddot[0], d.qddot[1]};
  };

  const double h = integ.dt_s / integ.substeps;
  Vec4 y = pack(state);
  for (int k = 0; k < integ.substeps; ++k) {
    if (integ.method == IntegratorMethod::RK4) {
      y = rk4_step(y, h, f);
    } else {
      // Semi-implicit Euler: velocities first, then positions with the new velocities.
      const StateDerivative d = deriv_op(unpack(y), control, params);
      y[2] += h * d.qddot[0];
      y[3] += h * d.qddot[1];
      y[0] += h * y[2];
      y[1] += h * y[3];
    }
    for (const double v : y) {
      if (!std::isfinite(v) || std::abs(v) > integ.state_bound)
        throw DivergenceError("state left the sanity bound " +
                              std::to_string(integ.state_bound));
    }
  }
  return unpack(y);
}

}  // namespace

SystemState step(const SystemState& state, double force, const CartpoleParams& params,
                 const IntegratorConfig& integ) {
  return integrate(state, force, params, integ,
                   [](const SystemState& s, double u, const CartpoleParams& p) {
                     return cartpole_derivative(s, u, p);
                   });
}

SystemState step(const SystemState& state, double torque, const DoublePendulumParams& params,
                 const IntegratorConfig& integ) {
  return integrate(state, torque, params, integ,
                   [](const SystemState& s, double u, const DoublePendulumParams& p) {
                     return double_pendulum_derivative(s, u, p);
                   });
}

Energy mechanical_energy(const SystemState& state, const CartpoleParams& params) {
  const double mc = params.cart_mass_kg, mp = params.pole_mass_kg;
  const double l = params.pole_length_m, g = params.gravity_mps2;
  const double theta = state.q[1];
  const double xd = state.qdot[0], thd = state.qdot[1];

  Energy e;
  e.kinetic_J = 0.5 * (mc + mp) * xd * xd + mp * l * std::cos(theta) * xd * thd +
                0.5 * mp * l * l * thd * thd;
  e.potential_J = mp * g * l * (1.0 - std::cos(theta));
  return e;
}

Energy mechanical_energy(const SystemState& state, const DoublePendulumParams& params) {
  const double m1 = params.m1_kg, m2 = params.m2_kg;
  const double l1 = params.l1_m, r1 = params.r1_m, r2 = params.r2_m;
  const double g = params.gravity_mps2;
  const double th1 = state.q[0], th2 = state.q[1];
  const double w1 = state.qdot[0], w2 = state.qdot[1];

  const double alpha = params.I1_kgm2 + params.I2_kgm2 + m1 * r1 * r1 + m2 * (l1 * l1 + r2 * r2);
  const double beta = m2 * l1 * r2;
  const double delta = params.I2_kgm2 + m2 * r2 * r2;
  const double c2 = std::cos(th2);

  Energy e;
  e.kinetic_J = 0.5 * (alpha + 2.0 * beta * c2) * w1 * w1 + (delta + beta * c2) * w1 * w2 +
                0.5 * delta * w2 * w2;
  // Datum at the hanging configuration, so V >= 0 and V(0,0) = 0.
  e.potential_J = g * ((m1 * r1 + m2 * l1) * (1.0 - std::cos(th1)) +
                       m2 * r2 * (1.0 - std::cos(th1 + th2)));
  return e;
}

double end_effector_height(const SystemState& state, const DoublePendulumParams& params) {
  return -params.l1_m * std::cos(state.q[0]) -
         params.l2_m * std::cos(state.q[0] + state.q[1]);
}

std::array<double, 2> pole_tip(const SystemState& state, const CartpoleParams& params) {
  const double l = params.pole_length_m;
  return {state.q[0] + l * std::sin(state.q[1]), -l * std::cos(state.q[1])};
}

}  // namespace upswing::physics
