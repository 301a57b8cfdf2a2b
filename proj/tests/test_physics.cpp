#include "upswing/physics.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "upswing/errors.hpp"
#include "upswing/rng.hpp"

using namespace upswing;
using physics::SystemState;

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;

physics::DoublePendulumParams undamped_pendulum() {
  physics::DoublePendulumParams p;
  p.b1_Nms = 0.0;
  p.b2_Nms = 0.0;
  return p;
}
}  // namespace

TEST_SUITE("physics") {

TEST_CASE("cartpole equilibria have zero derivative") {
  physics::CartpoleParams p;
  for (const double theta : {0.0, kPi, -kPi}) {
    const SystemState s{{0.0, theta}, {0.0, 0.0}};
    const auto d = physics::cartpole_derivative(s, 0.0, p);
    CHECK(d.qdot[0] == 0.0);
    CHECK(d.qdot[1] == 0.0);
    CHECK(d.qddot[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(std::abs(d.qddot[1]) < 1e-14);
  }
}

TEST_CASE("cartpole horizontal pole matches the hand-derived Lagrangian value") {
  physics::CartpoleParams p;  // g = 9.81, l = 0.5
  const SystemState s{{0.0, kPi / 2.0}, {0.0, 0.0}};
  const auto d = physics::cartpole_derivative(s, 0.0, p);
  CHECK(d.qddot[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d.qddot[1] == doctest::Approx(-19.62).epsilon(1e-12));
}

TEST_CASE("cartpole derivative matches the finite-differenced Lagrangian oracle") {
  physics::CartpoleParams p;
  p.cart_friction_Nspm = 0.1;
  Rng rng(101);
  for (int i = 0; i < 25; ++i) {
    const SystemState s{{rng.uniform(-2, 2), rng.uniform(-4, 4)},
                        {rng.uniform(-3, 3), rng.uniform(-6, 6)}};
    const double force = rng.uniform(-p.u_max_N, p.u_max_N);
    const auto d = physics::cartpole_derivative(s, force, p);
    const auto ref = oracles::cartpole_qddot_oracle(s, force, p);
    for (int j = 0; j < 2; ++j)
      CHECK(d.qddot[j] == doctest::Approx(ref[j]).epsilon(1e-5));
  }
}

TEST_CASE("double pendulum equilibria have zero derivative") {
  const auto p = undamped_pendulum();
  for (const auto& q : {std::array<double, 2>{0, 0}, std::array<double, 2>{kPi, 0},
                        std::array<double, 2>{0, kPi}, std::array<double, 2>{kPi, kPi}}) {
    const SystemState s{q, {0.0, 0.0}};
    const auto d = physics::double_pendulum_derivative(s, 0.0, p);
    CHECK(std::abs(d.qddot[0]) < 1e-12);
    CHECK(std::abs(d.qddot[1]) < 1e-12);
  }
}

TEST_CASE("double pendulum derivative matches the finite-differenced Lagrangian oracle") {
  for (const auto act : {physics::Actuation::Pendubot, physics::Actuation::Acrobot}) {
    physics::DoublePendulumParams p;
    p.actuation = act;
    Rng rng(act == physics::Actuation::Pendubot ? 7 : 8);
    for (int i = 0; i < 25; ++i) {
      const SystemState s{{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)},
                          {rng.uniform(-8, 8), rng.uniform(-8, 8)}};
      const double torque = i == 0 ? 1.0 : rng.uniform(-3, 3);
      const auto d = physics::double_pendulum_derivative(s, torque, p);
      const auto ref = oracles::double_pendulum_qddot_oracle(s, torque, p);
      // The oracle's truncation error is amplified by the small mass matrix.
      for (int j = 0; j < 2; ++j)
        CHECK(d.qddot[j] ==
              doctest::Approx(ref[j]).epsilon(5e-4).scale(std::max(1.0, std::abs(ref[j]))));
    }
  }
}

TEST_CASE("step at an equilibrium returns the state exactly") {
  physics::IntegratorConfig integ;
  const SystemState hanging{};
  SUBCASE("rk4") {}
  SUBCASE("semi-implicit euler") { integ.method = physics::IntegratorMethod::SemiImplicitEuler; }

  const auto cp_next = physics::step(hanging, 0.0, physics::CartpoleParams{}, integ);
  CHECK(cp_next == hanging);
  const auto dp_next = physics::step(hanging, 0.0, undamped_pendulum(), integ);
  CHECK(dp_next == hanging);
}

TEST_CASE("step is deterministic") {
  physics::DoublePendulumParams p;
  physics::IntegratorConfig integ;
  const SystemState s{{0.3, -0.8}, {1.0, -2.0}};
  const auto a = physics::step(s, 1.3, p, integ);
  const auto b = physics::step(s, 1.3, p, integ);
  CHECK(a == b);
}

TEST_CASE("rk4 shows fourth-order convergence in the internal step") {
  const auto p = undamped_pendulum();
  const SystemState start{{kPi / 2.0, 0.0}, {0.0, 0.0}};

  const auto integrate = [&](int substeps) {
    physics::IntegratorConfig integ;
    integ.dt_s = 0.05;
    integ.substeps = substeps;
    SystemState s = start;
    for (int k = 0; k < 20; ++k) s = physics::step(s, 0.0, p, integ);  // 1 s
    return s;
  };

  const SystemState ref = integrate(512);
  const auto err = [&](const SystemState& s) {
    double e = 0.0;
    for (int i = 0; i < 2; ++i) {
      e = std::max(e, std::abs(s.q[i] - ref.q[i]));
      e = std::max(e, std::abs(s.qdot[i] - ref.qdot[i]));
    }
    return e;
  };

  const double e1 = err(integrate(4));
  const double e2 = err(integrate(8));
  CHECK(e1 > 0.0);
  const double order = std::log2(e1 / e2);
  CHECK(order > 3.5);
  CHECK(order < 4.6);
}

TEST_CASE("energy is conserved for 10 s without control or damping") {
  physics::IntegratorConfig integ;
  integ.dt_s = 1e-3;
  integ.substeps = 1;

  SUBCASE("double pendulum") {
    const auto p = undamped_pendulum();
    SystemState s{{kPi / 2.0, 0.0}, {0.0, 0.0}};
    const double e0 = physics::mechanical_energy(s, p).total();
    double max_drift = 0.0;
    for (int k = 0; k < 10'000; ++k) {
      s = physics::step(s, 0.0, p, integ);
      max_drift = std::max(max_drift,
                           std::abs(physics::mechanical_energy(s, p).total() - e0));
    }
    CHECK(max_drift / e0 < 1e-3);
  }
  SUBCASE("cartpole") {
    physics::CartpoleParams p;
    SystemState s{{0.0, kPi / 2.0}, {0.0, 0.0}};
    const double e0 = physics::mechanical_energy(s, p).total();
    double max_drift = 0.0;
    for (int k = 0; k < 10'000; ++k) {
      s = physics::step(s, 0.0, p, integ);
      max_drift = std::max(max_drift,
                           std::abs(physics::mechanical_energy(s, p).total() - e0));
    }
    CHECK(max_drift / e0 < 1e-3);
  }
}

TEST_CASE("damped unforced motion dissipates energy") {
  physics::DoublePendulumParams p;  // b1 = b2 = 0.005
  physics::IntegratorConfig integ;
  SystemState s{{2.0, 1.0}, {0.0, 0.0}};
  double prev = physics::mechanical_energy(s, p).total();
  for (int k = 0; k < 500; ++k) {
    s = physics::step(s, 0.0, p, integ);
    const double e = physics::mechanical_energy(s, p).total();
    CHECK(e <= prev + 1e-6);
    prev = e;
  }
}

TEST_CASE("cartpole dynamics are mirror-symmetric") {
  physics::CartpoleParams p;
  p.cart_friction_Nspm = 0.05;
  Rng rng(33);
  for (int i = 0; i < 20; ++i) {
    const SystemState s{{rng.uniform(-2, 2), rng.uniform(-4, 4)},
                        {rng.uniform(-3, 3), rng.uniform(-5, 5)}};
    const double u = rng.uniform(-2.5, 2.5);
    const SystemState m{{-s.q[0], -s.q[1]}, {-s.qdot[0], -s.qdot[1]}};
    const auto d = physics::cartpole_derivative(s, u, p);
    const auto dm = physics::cartpole_derivative(m, -u, p);
    CHECK(dm.qddot[0] == doctest::Approx(-d.qddot[0]).epsilon(1e-12));
    CHECK(dm.qddot[1] == doctest::Approx(-d.qddot[1]).epsilon(1e-12));
  }
}

TEST_CASE("mechanical energy datum and closed forms") {
  physics::DoublePendulumParams p;
  SUBCASE("hanging rest is the datum") {
    const auto e = physics::mechanical_energy(SystemState{}, p);
    CHECK(e.kinetic_J == 0.0);
    CHECK(e.potential_J == 0.0);
  }
  SUBCASE("upright rest potential is the hand-computed lift") {
    // 2 g (m1 r1 + m2 l1 + m2 r2) with the default parameters
    const auto e = physics::mechanical_energy(SystemState{{kPi, 0.0}, {0.0, 0.0}}, p);
    CHECK(e.kinetic_J == doctest::Approx(0.0));
    CHECK(e.potential_J == doctest::Approx(5.395499999999999).epsilon(1e-12));
  }
  SUBCASE("zero velocity means zero kinetic energy") {
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
      const SystemState s{{rng.uniform(-4, 4), rng.uniform(-4, 4)}, {0.0, 0.0}};
      CHECK(physics::mechanical_energy(s, p).kinetic_J == 0.0);
      CHECK(physics::mechanical_energy(s, p).potential_J >= 0.0);
    }
  }
  SUBCASE("kinetic energy is non-negative") {
    Rng rng(6);
    for (int i = 0; i < 50; ++i) {
      const SystemState s{{rng.uniform(-4, 4), rng.uniform(-4, 4)},
                          {rng.uniform(-10, 10), rng.uniform(-10, 10)}};
      CHECK(physics::mechanical_energy(s, p).kinetic_J >= 0.0);
    }
  }
}

TEST_CASE("end effector height closed forms") {
  physics::DoublePendulumParams p;  // l1 = 0.3, l2 = 0.2
  CHECK(physics::end_effector_height(SystemState{}, p) == doctest::Approx(-0.5));
  CHECK(physics::end_effector_height(SystemState{{kPi, 0}, {0, 0}}, p) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(physics::end_effector_height(SystemState{{kPi, kPi}, {0, 0}}, p) ==
        doctest::Approx(p.l1_m - p.l2_m).epsilon(1e-9));
}

TEST_CASE("pole tip closed forms") {
  physics::CartpoleParams p;  // l = 0.5
  const auto hang = physics::pole_tip(SystemState{}, p);
  CHECK(hang[0] == doctest::Approx(0.0));
  CHECK(hang[1] == doctest::Approx(-0.5));

  const auto up = physics::pole_tip(SystemState{{0, kPi}, {0, 0}}, p);
  CHECK(up[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(up[1] == doctest::Approx(0.5).epsilon(1e-12));

  const auto side = physics::pole_tip(SystemState{{1, kPi / 2}, {0, 0}}, p);
  CHECK(side[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(side[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("divergence guard aborts instead of propagating") {
  physics::DoublePendulumParams p;
  physics::IntegratorConfig integ;
  integ.state_bound = 1.0;
  const SystemState s{{0.9, 0.9}, {50.0, 0.0}};
  CHECK_THROWS_AS(physics::step(s, 0.0, p, integ), DivergenceError);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(physics::cartpole_derivative(
                      SystemState{{std::nan(""), 0}, {0, 0}}, 0.0, physics::CartpoleParams{}),
                  DomainError);
  physics::CartpoleParams bad;
  bad.pole_mass_kg = -1.0;
  CHECK_THROWS_AS(physics::validate(bad), ConfigError);
  physics::DoublePendulumParams badp;
  badp.tau_max_Nm = 0.0;
  CHECK_THROWS_AS(physics::validate(badp), ConfigError);
  physics::IntegratorConfig integ;
  integ.substeps = 0;
  CHECK_THROWS_AS(physics::step(SystemState{}, 0.0, physics::DoublePendulumParams{}, integ),
                  ConfigError);
}

}  // TEST_SUITE
