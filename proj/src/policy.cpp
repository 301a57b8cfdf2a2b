#include "upswing/policy.hpp"

#include <algorithm>
#include <cmath>

#include "upswing/errors.hpp"

namespace upswing::policy {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
}  // namespace

double log_one_minus_tanh_sq(double u) {
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  return 2.0 * (0.6931471805599453094172321214582 - u - softplus(-2.0 * u));
}

Policy make_gaussian_policy(int obs_dim, const std::vector<int>& hidden, int action_dim,
                            double action_scale, std::uint64_t seed) {
  Policy p;
  p.kind = PolicyKind::Gaussian;
  p.arch.input_dim = obs_dim;
  p.arch.hidden_sizes = hidden;
  p.arch.output_dim = 2 * action_dim;
  p.arch.hidden_activation = nn::Activation::Tanh;
  p.action_scale = action_scale;
  p.params = nn::init_params(p.arch, seed);
  validate(p);
  return p;
}

Policy make_deterministic_policy(int obs_dim, const std::vector<int>& hidden, int action_dim,
                                 double action_scale, std::uint64_t seed) {
  Policy p;
  p.kind = PolicyKind::Deterministic;
  p.arch.input_dim = obs_dim;
  p.arch.hidden_sizes = hidden;
  p.arch.output_dim = action_dim;
  p.arch.hidden_activation = nn::Activation::Tanh;
  p.action_scale = action_scale;
  p.params = nn::init_params(p.arch, seed);
  validate(p);
  return p;
}

void validate(const Policy& p) {
  nn::validate(p.arch);
  if (p.kind == PolicyKind::Gaussian && p.arch.output_dim % 2 != 0)
    throw ConfigError("gaussian policy: output_dim must be 2 * action_dim");
  if (!(p.action_scale > 0.0)) throw ConfigError("policy: action_scale must be positive");
  if (p.params.size() != nn::param_count(p.arch))
    throw ConfigError("policy: parameter count does not match architecture");
}

namespace {

struct GaussianHead {
  std::vector<double> mu, log_std;
};

GaussianHead gaussian_head(const Policy& p, std::span<const double> obs) {
  const auto out = nn::forward(p.arch, p.params, obs);
  const int d = p.action_dim();
  GaussianHead h;
  h.mu.assign(out.begin(), out.begin() + d);
  h.log_std.resize(d);
  for (int i = 0; i < d; ++i)
    h.log_std[i] = std::clamp(out[d + i], p.log_std_min, p.log_std_max);
  return h;
}

}  // namespace

ActionSample sample_action(const Policy& p, std::span<const double> obs, Rng& rng) {
  if (p.kind != PolicyKind::Gaussian)
    throw ConfigError("sample_action: requires a Gaussian policy");
  const GaussianHead h = gaussian_head(p, obs);
  const int d = p.action_dim();

  ActionSample s;
  s.action.resize(d);
  s.log_prob = 0.0;
  for (int i = 0; i < d; ++i) {
    const double sigma = std::exp(h.log_std[i]);
    const double eps = rng.normal();
    const double u = h.mu[i] + sigma * eps;
    s.action[i] = p.action_scale * std::tanh(u);
    s.log_prob += -0.5 * eps * eps - h.log_std[i] - 0.5 * kLog2Pi -
                  log_one_minus_tanh_sq(u) - std::log(p.action_scale);
  }
  return s;
}

std::vector<double> greedy_action(const Policy& p, std::span<const double> obs) {
  std::vector<double> mu;
  if (p.kind == PolicyKind::Gaussian) {
    mu = gaussian_head(p, obs).mu;
  } else {
    mu = nn::forward(p.arch, p.params, obs);
  }
  for (auto& v : mu) v = p.action_scale * std::tanh(v);
  return mu;
}

double inject_presquash_noise(double action_unit, double eta, double atanh_clip) {
  const double a = std::clamp(action_unit, -1.0 + atanh_clip, 1.0 - atanh_clip);
  return std::tanh(std::atanh(a) + eta);
}

std::vector<double> noisy_greedy_action(const Policy& p, std::span<const double> obs,
                                        const NoiseInjectionConfig& noise, Rng& rng) {
  if (noise.sigma < 0.0) throw ConfigError("noise injection: sigma must be >= 0");
  std::vector<double> a = greedy_action(p, obs);
  for (auto& v : a) {
    const double eta = noise.sigma > 0.0 ? noise.sigma * rng.normal() : 0.0;
    v = p.action_scale * inject_presquash_noise(v / p.action_scale, eta, noise.atanh_clip);
  }
  return a;
}

double action_log_prob(const Policy& p, std::span<const double> obs,
                       std::span<const double> action) {
  if (p.kind != PolicyKind::Gaussian)
    throw ConfigError("action_log_prob: requires a Gaussian policy");
  const GaussianHead h = gaussian_head(p, obs);
  const int d = p.action_dim();
  double lp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double a = std::clamp(action[i] / p.action_scale, -1.0 + 1e-12, 1.0 - 1e-12);
    const double u = std::atanh(a);
    const double sigma = std::exp(h.log_std[i]);
    const double z = (u - h.mu[i]) / sigma;
    lp += -0.5 * z * z - h.log_std[i] - 0.5 * kLog2Pi - log_one_minus_tanh_sq(u) -
          std::log(p.action_scale);
  }
  return lp;
}

std::vector<double> action_variance(const Policy& p, std::span<const double> obs) {
  const int d = p.action_dim();
  if (p.kind != PolicyKind::Gaussian) return std::vector<double>(d, 0.0);
  const GaussianHead h = gaussian_head(p, obs);
  std::vector<double> var(d);
  for (int i = 0; i < d; ++i) var[i] = std::exp(2.0 * h.log_std[i]);
  return var;
}

double measure_action_variance(const Policy& p,
                               std::span<const std::vector<double>> observations) {
  if (observations.empty()) throw DomainError("measure_action_variance: no observations");
  double acc = 0.0;
  for (const auto& obs : observations) {
    const auto var = action_variance(p, obs);
    double per_state = 0.0;
    for (double v : var) per_state += v;
    acc += per_state / static_cast<double>(var.size());
  }
  return acc / static_cast<double>(observations.size());
}

}  // namespace upswing::policy
