#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <optional>

#include "upswing/checkpoint.hpp"
#include "upswing/errors.hpp"
#include "upswing/evo.hpp"
#include "upswing/harness.hpp"
#include "upswing/nn.hpp"
#include "upswing/physics.hpp"
#include "upswing/policy.hpp"
#include "upswing/robustness.hpp"
#include "upswing/scoring.hpp"
#include "upswing/sim.hpp"

namespace py = pybind11;
using namespace upswing;

namespace {

std::vector<double> obs_vector(const sim::EnvConfig& cfg, const physics::SystemState& s) {
  const auto o = sim::observe(cfg, s);
  return {o.data.begin(), o.data.begin() + o.dim};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Swing-up control learning: simulators, scoring, SNES and policy utilities";

  py::register_exception<DomainError>(m, "DomainError");
  py::register_exception<ConfigError>(m, "ConfigurationError");
  py::register_exception<DivergenceError>(m, "DivergenceError");

  // physics
  py::class_<physics::SystemState>(m, "SystemState")
      .def(py::init<>())
      .def(py::init([](std::array<double, 2> q, std::array<double, 2> qdot) {
             return physics::SystemState{q, qdot};
           }),
           py::arg("q"), py::arg("qdot"))
      .def_readwrite("q", &physics::SystemState::q)
      .def_readwrite("qdot", &physics::SystemState::qdot);

  py::class_<physics::StateDerivative>(m, "StateDerivative")
      .def_readonly("qdot", &physics::StateDerivative::qdot)
      .def_readonly("qddot", &physics::StateDerivative::qddot);

  py::class_<physics::CartpoleParams>(m, "CartpoleParams")
      .def(py::init<>())
      .def_readwrite("cart_mass_kg", &physics::CartpoleParams::cart_mass_kg)
      .def_readwrite("pole_mass_kg", &physics::CartpoleParams::pole_mass_kg)
      .def_readwrite("pole_length_m", &physics::CartpoleParams::pole_length_m)
      .def_readwrite("gravity_mps2", &physics::CartpoleParams::gravity_mps2)
      .def_readwrite("cart_friction_Nspm", &physics::CartpoleParams::cart_friction_Nspm)
      .def_readwrite("u_max_N", &physics::CartpoleParams::u_max_N);

  py::enum_<physics::Actuation>(m, "Actuation")
      .value("Pendubot", physics::Actuation::Pendubot)
      .value("Acrobot", physics::Actuation::Acrobot);

  py::class_<physics::DoublePendulumParams>(m, "DoublePendulumParams")
      .def(py::init<>())
      .def_readwrite("m1_kg", &physics::DoublePendulumParams::m1_kg)
      .def_readwrite("m2_kg", &physics::DoublePendulumParams::m2_kg)
      .def_readwrite("l1_m", &physics::DoublePendulumParams::l1_m)
      .def_readwrite("l2_m", &physics::DoublePendulumParams::l2_m)
      .def_readwrite("r1_m", &physics::DoublePendulumParams::r1_m)
      .def_readwrite("r2_m", &physics::DoublePendulumParams::r2_m)
      .def_readwrite("I1_kgm2", &physics::DoublePendulumParams::I1_kgm2)
      .def_readwrite("I2_kgm2", &physics::DoublePendulumParams::I2_kgm2)
      .def_readwrite("b1_Nms", &physics::DoublePendulumParams::b1_Nms)
      .def_readwrite("b2_Nms", &physics::DoublePendulumParams::b2_Nms)
      .def_readwrite("gravity_mps2", &physics::DoublePendulumParams::gravity_mps2)
      .def_readwrite("tau_max_Nm", &physics::DoublePendulumParams::tau_max_Nm)
      .def_readwrite("actuation", &physics::DoublePendulumParams::actuation);

  py::enum_<physics::IntegratorMethod>(m, "IntegratorMethod")
      .value("RK4", physics::IntegratorMethod::RK4)
      .value("SemiImplicitEuler", physics::IntegratorMethod::SemiImplicitEuler);

  py::class_<physics::IntegratorConfig>(m, "IntegratorConfig")
      .def(py::init<>())
      .def_readwrite("method", &physics::IntegratorConfig::method)
      .def_readwrite("dt_s", &physics::IntegratorConfig::dt_s)
      .def_readwrite("substeps", &physics::IntegratorConfig::substeps)
      .def_readwrite("state_bound", &physics::IntegratorConfig::state_bound);

  py::class_<physics::Energy>(m, "Energy")
      .def_readonly("kinetic_J", &physics::Energy::kinetic_J)
      .def_readonly("potential_J", &physics::Energy::potential_J)
      .def("total", &physics::Energy::total);

  m.def("cartpole_derivative", &physics::cartpole_derivative, py::arg("state"),
        py::arg("force"), py::arg("params"));
  m.def("double_pendulum_derivative", &physics::double_pendulum_derivative, py::arg("state"),
        py::arg("torque"), py::arg("params"));
  m.def("cartpole_step",
        py::overload_cast<const physics::SystemState&, double, const physics::CartpoleParams&,
                          const physics::IntegratorConfig&>(&physics::step),
        py::arg("state"), py::arg("force"), py::arg("params"), py::arg("integrator"));
  m.def("double_pendulum_step",
        py::overload_cast<const physics::SystemState&, double,
                          const physics::DoublePendulumParams&,
                          const physics::IntegratorConfig&>(&physics::step),
        py::arg("state"), py::arg("torque"), py::arg("params"), py::arg("integrator"));
  m.def("cartpole_energy",
        py::overload_cast<const physics::SystemState&, const physics::CartpoleParams&>(
            &physics::mechanical_energy));
  m.def("double_pendulum_energy",
        py::overload_cast<const physics::SystemState&, const physics::DoublePendulumParams&>(
            &physics::mechanical_energy));
  m.def("end_effector_height", &physics::end_effector_height);
  m.def("pole_tip", &physics::pole_tip);

  // nn
  py::enum_<nn::Activation>(m, "Activation")
      .value("Tanh", nn::Activation::Tanh)
      .value("ReLU", nn::Activation::ReLU);

  py::class_<nn::MlpArchitecture>(m, "MlpArchitecture")
      .def(py::init<>())
      .def_readwrite("input_dim", &nn::MlpArchitecture::input_dim)
      .def_readwrite("hidden_sizes", &nn::MlpArchitecture::hidden_sizes)
      .def_readwrite("output_dim", &nn::MlpArchitecture::output_dim)
      .def_readwrite("hidden_activation", &nn::MlpArchitecture::hidden_activation);

  m.def("param_count", &nn::param_count);
  m.def("mlp_forward",
        [](const nn::MlpArchitecture& arch, const nn::ParamVector& params,
           const std::vector<double>& input) { return nn::forward(arch, params, input); });
  m.def("init_params", &nn::init_params, py::arg("arch"), py::arg("seed"));
  m.def("gradient_check_suite", &nn::gradient_check_suite, py::arg("n_cases"), py::arg("seed"),
        py::arg("h") = 1e-5);

  // policy
  py::enum_<policy::PolicyKind>(m, "PolicyKind")
      .value("Gaussian", policy::PolicyKind::Gaussian)
      .value("Deterministic", policy::PolicyKind::Deterministic);

  py::class_<policy::Policy>(m, "Policy")
      .def(py::init<>())
      .def_readwrite("kind", &policy::Policy::kind)
      .def_readwrite("arch", &policy::Policy::arch)
      .def_readwrite("params", &policy::Policy::params)
      .def_readwrite("action_scale", &policy::Policy::action_scale)
      .def("action_dim", &policy::Policy::action_dim);

  m.def("make_gaussian_policy", &policy::make_gaussian_policy, py::arg("obs_dim"),
        py::arg("hidden"), py::arg("action_dim"), py::arg("action_scale"), py::arg("seed"));
  m.def("greedy_action", [](const policy::Policy& p, const std::vector<double>& obs) {
    return policy::greedy_action(p, obs);
  });
  m.def(
      "sample_action",
      [](const policy::Policy& p, const std::vector<double>& obs, std::uint64_t seed) {
        Rng rng(seed);
        const auto s = policy::sample_action(p, obs, rng);
        return py::make_tuple(s.action, s.log_prob);
      },
      py::arg("policy"), py::arg("obs"), py::arg("seed"));
  m.def(
      "noisy_greedy_action",
      [](const policy::Policy& p, const std::vector<double>& obs, double sigma,
         std::uint64_t seed) {
        Rng rng(seed);
        return policy::noisy_greedy_action(p, obs, {sigma, 1e-6}, rng);
      },
      py::arg("policy"), py::arg("obs"), py::arg("sigma"), py::arg("seed"));

  // scoring
  py::class_<scoring::DoublePendulumRewardWeights>(m, "RewardWeights")
      .def(py::init<>())
      .def_readwrite("alpha", &scoring::DoublePendulumRewardWeights::alpha)
      .def_readwrite("beta", &scoring::DoublePendulumRewardWeights::beta)
      .def_readwrite("rho1", &scoring::DoublePendulumRewardWeights::rho1)
      .def_readwrite("rho2", &scoring::DoublePendulumRewardWeights::rho2)
      .def_readwrite("phi1", &scoring::DoublePendulumRewardWeights::phi1)
      .def_readwrite("phi2", &scoring::DoublePendulumRewardWeights::phi2)
      .def_readwrite("eta", &scoring::DoublePendulumRewardWeights::eta)
      .def_readwrite("y_th_m", &scoring::DoublePendulumRewardWeights::y_th_m);

  m.def("default_reward_weights", &scoring::default_reward_weights);
  m.def("cartpole_reward", &scoring::cartpole_reward);
  m.def("double_pendulum_reward", &scoring::double_pendulum_reward, py::arg("state"),
        py::arg("action"), py::arg("prev_action"), py::arg("weights"), py::arg("params"));
  m.def(
      "performance_score",
      [](const std::array<double, 5>& x, const std::array<double, 5>& k, int c_succ) {
        scoring::ScoreCriteria c;
        c.x = x;
        c.k = k;
        return scoring::performance_score(c, c_succ);
      },
      py::arg("x"), py::arg("k"), py::arg("c_succ"));
  m.def("final_score", &scoring::final_score);

  // evo
  m.def("nes_utilities", &evo::utilities, py::arg("lambda_"));
  m.def("sphere_benchmark_median", &evo::sphere_benchmark_median, py::arg("dim"),
        py::arg("lambda_"), py::arg("sigma0"), py::arg("generations"), py::arg("n_seeds"),
        py::arg("seed0"));

  py::class_<evo::SnesState>(m, "SnesState")
      .def_readwrite("mean", &evo::SnesState::mean)
      .def_readwrite("sigma", &evo::SnesState::sigma)
      .def_readonly("generation", &evo::SnesState::generation)
      .def_readonly("population_size", &evo::SnesState::lambda);

  m.def("snes_init", &evo::snes_init, py::arg("mean"), py::arg("sigma_init"), py::arg("lambda_"),
        py::arg("seed"), py::arg("eta_mean") = 1.0, py::arg("eta_sigma") = 0.0);
  m.def("snes_ask", [](const evo::SnesState& s) {
    std::vector<std::vector<double>> params;
    for (const auto& c : evo::sample_population(s)) params.push_back(c.params);
    return params;
  });
  m.def("snes_tell", [](const evo::SnesState& s, const std::vector<double>& fitnesses) {
    return evo::snes_step(s, fitnesses);
  });

  // sim
  py::enum_<sim::SystemId>(m, "SystemId")
      .value("Cartpole", sim::SystemId::Cartpole)
      .value("Acrobot", sim::SystemId::Acrobot)
      .value("Pendubot", sim::SystemId::Pendubot);

  py::enum_<sim::ControlMode>(m, "ControlMode")
      .value("Greedy", sim::ControlMode::Greedy)
      .value("Noisy", sim::ControlMode::Noisy)
      .value("Stochastic", sim::ControlMode::Stochastic);

  py::class_<sim::EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("system", &sim::EnvConfig::system)
      .def_readwrite("cartpole", &sim::EnvConfig::cartpole)
      .def_readwrite("pendulum", &sim::EnvConfig::pendulum)
      .def_readwrite("integrator", &sim::EnvConfig::integrator)
      .def_readwrite("horizon_s", &sim::EnvConfig::horizon_s)
      .def_readwrite("reward_weights", &sim::EnvConfig::reward_weights)
      .def_readwrite("reset_noise", &sim::EnvConfig::reset_noise)
      .def_readwrite("obs_vel_scale", &sim::EnvConfig::obs_vel_scale)
      .def("obs_dim", &sim::EnvConfig::obs_dim)
      .def("action_scale", &sim::EnvConfig::action_scale)
      .def("steps_per_episode", &sim::EnvConfig::steps_per_episode);

  m.def("observe", &obs_vector, py::arg("env"), py::arg("state"));

  py::class_<sim::Trajectory>(m, "Trajectory")
      .def_readonly("dt_s", &sim::Trajectory::dt_s)
      .def_readonly("action_scale", &sim::Trajectory::action_scale)
      .def_readonly("states", &sim::Trajectory::states)
      .def_readonly("controls", &sim::Trajectory::controls)
      .def_readonly("rewards", &sim::Trajectory::rewards)
      .def_readonly("diverged", &sim::Trajectory::diverged)
      .def("steps", &sim::Trajectory::steps)
      .def("duration_s", &sim::Trajectory::duration_s);

  m.def(
      "rollout",
      [](const policy::Policy& p, const sim::EnvConfig& env, sim::ControlMode mode,
         double noise_sigma, std::uint64_t seed) {
        sim::RolloutOptions opt;
        opt.mode = mode;
        opt.noise.sigma = noise_sigma;
        opt.seed = seed;
        return sim::rollout(p, env, opt);
      },
      py::arg("policy"), py::arg("env"), py::arg("mode") = sim::ControlMode::Greedy,
      py::arg("noise_sigma") = 0.0, py::arg("seed") = 0);
  m.def("swing_up_time", [](const sim::Trajectory& t, const physics::CartpoleParams& p) {
    return scoring::swing_up_time(t, p);
  });
  m.def("extract_criteria", [](const sim::Trajectory& t, const physics::DoublePendulumParams& p) {
    const auto r = scoring::extract_criteria(t, p, scoring::CriteriaConfig{});
    return py::make_tuple(r.criteria.x, r.c_succ);
  });

  // checkpoints
  py::class_<harness::Checkpoint>(m, "Checkpoint")
      .def_readonly("system", &harness::Checkpoint::system)
      .def_readonly("phase", &harness::Checkpoint::phase)
      .def_readonly("arch", &harness::Checkpoint::arch)
      .def_readonly("action_scale", &harness::Checkpoint::action_scale)
      .def_readonly("params", &harness::Checkpoint::params)
      .def_readonly("seed", &harness::Checkpoint::seed)
      .def_readonly("noise_variance", &harness::Checkpoint::noise_variance);

  m.def("load_checkpoint", &harness::load_checkpoint);
  m.def("policy_from_checkpoint", &harness::policy_from_checkpoint);
}
