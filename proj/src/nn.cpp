#include "upswing/nn.hpp"

#include <cmath>
#include <string>

#include "upswing/errors.hpp"
#include "upswing/rng.hpp"

namespace upswing::nn {

std::vector<int> MlpArchitecture::layer_dims() const {
  std::vector<int> dims;
  dims.reserve(hidden_sizes.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
  dims.push_back(output_dim);
  return dims;
}

void validate(const MlpArchitecture& arch) {
  if (arch.input_dim < 1 || arch.output_dim < 1)
    throw ConfigError("mlp: input/output dims must be >= 1");
  for (int h : arch.hidden_sizes)
    if (h < 1) throw ConfigError("mlp: hidden sizes must be >= 1");
}

std::size_t param_count(const MlpArchitecture& arch) {
  const auto dims = arch.layer_dims();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l)
    n += static_cast<std::size_t>(dims[l] + 1) * dims[l + 1];
  return n;
}

std::vector<LayerSpan> layer_spans(const MlpArchitecture& arch) {
  const auto dims = arch.layer_dims();
  std::vector<LayerSpan> spans;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    LayerSpan s;
    s.in = dims[l];
    s.out = dims[l + 1];
    s.w_offset = off;
    s.b_offset = off + static_cast<std::size_t>(s.in) * s.out;
    off = s.b_offset + s.out;
    spans.push_back(s);
  }
  return spans;
}

std::vector<LayerParams> unflatten(const MlpArchitecture& arch, const ParamVector& flat) {
  if (flat.size() != param_count(arch))
    throw ConfigError("unflatten: parameter vector length " + std::to_string(flat.size()) +
                      " does not match architecture (" + std::to_string(param_count(arch)) + ")");
  std::vector<LayerParams> layers;
  for (const LayerSpan& s : layer_spans(arch)) {
    LayerParams lp;
    lp.W = Eigen::Map<const Matrix>(flat.data() + s.w_offset, s.out, s.in);
    lp.b = Eigen::Map<const Eigen::VectorXd>(flat.data() + s.b_offset, s.out);
    layers.push_back(std::move(lp));
  }
  return layers;
}

ParamVector flatten(const MlpArchitecture& arch, const std::vector<LayerParams>& layers) {
  const auto spans = layer_spans(arch);
  if (layers.size() != spans.size()) throw ConfigError("flatten: wrong layer count");
  ParamVector flat(param_count(arch));
  for (std::size_t l = 0; l < spans.size(); ++l) {
    const LayerSpan& s = spans[l];
    if (layers[l].W.rows() != s.out || layers[l].W.cols() != s.in || layers[l].b.size() != s.out)
      throw ConfigError("flatten: layer shape mismatch");
    Eigen::Map<Matrix>(flat.data() + s.w_offset, s.out, s.in) = layers[l].W;
    Eigen::Map<Eigen::VectorXd>(flat.data() + s.b_offset, s.out) = layers[l].b;
  }
  return flat;
}

namespace {

void apply_activation(Matrix& z, Activation act) {
  if (act == Activation::Tanh) {
    // Scalar std::tanh for every element: Eigen's packet tanh differs from the
    // scalar one in the last ulp, which would make results depend on how the
    // loop split between packet body and scalar tail.
    double* p = z.data();
    for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = std::tanh(p[i]);
  } else {
    z = z.cwiseMax(0.0);
  }
}

// Derivative from the post-activation value.
Matrix activation_grad(const Matrix& a, Activation act) {
  if (act == Activation::Tanh) return (1.0 - a.array().square()).matrix();
  return (a.array() > 0.0).cast<double>().matrix();
}

void check_forward_args(const MlpArchitecture& arch, const ParamVector& params, const Matrix& X) {
  validate(arch);
  if (params.size() != param_count(arch))
    throw ConfigError("forward: parameter vector length does not match architecture");
  if (X.cols() != arch.input_dim)
    throw ConfigError("forward: input dimension " + std::to_string(X.cols()) +
                      ", expected " + std::to_string(arch.input_dim));
}

Matrix run_forward(const MlpArchitecture& arch, const ParamVector& params, const Matrix& X,
                   std::vector<Matrix>* trace) {
  const auto spans = layer_spans(arch);
  Matrix a = X;
  if (trace) trace->push_back(a);
  for (std::size_t l = 0; l < spans.size(); ++l) {
    const LayerSpan& s = spans[l];
    Eigen::Map<const Matrix> W(params.data() + s.w_offset, s.out, s.in);
    Eigen::Map<const Eigen::RowVectorXd> b(params.data() + s.b_offset, s.out);
    Matrix z = a * W.transpose();
    z.rowwise() += b;
    if (l + 1 < spans.size()) apply_activation(z, arch.hidden_activation);
    a = std::move(z);
    if (trace) trace->push_back(a);
  }
  return a;
}

}  // namespace

Matrix forward_batch(const MlpArchitecture& arch, const ParamVector& params, const Matrix& X) {
  check_forward_args(arch, params, X);
  return run_forward(arch, params, X, nullptr);
}

std::pair<Matrix, GradientTape> forward_batch_tape(const MlpArchitecture& arch,
                                                   const ParamVector& params, const Matrix& X) {
  check_forward_args(arch, params, X);
  GradientTape tape;
  tape.arch = arch;
  tape.params = params;
  Matrix out = run_forward(arch, params, X, &tape.activations);
  return {std::move(out), std::move(tape)};
}

std::vector<double> forward(const MlpArchitecture& arch, const ParamVector& params,
                            std::span<const double> input) {
  Matrix X = Eigen::Map<const Eigen::RowVectorXd>(input.data(), input.size());
  Matrix Y = forward_batch(arch, params, X);
  return {Y.data(), Y.data() + Y.cols()};
}

std::pair<std::vector<double>, GradientTape> forward_tape(const MlpArchitecture& arch,
                                                          const ParamVector& params,
                                                          std::span<const double> input) {
  Matrix X = Eigen::Map<const Eigen::RowVectorXd>(input.data(), input.size());
  auto [Y, tape] = forward_batch_tape(arch, params, X);
  return {std::vector<double>(Y.data(), Y.data() + Y.cols()), std::move(tape)};
}

Gradients backward(GradientTape& tape, const Matrix& cotangents) {
  if (tape.consumed) throw ConfigError("backward: tape already consumed");
  tape.consumed = true;

  const auto spans = layer_spans(tape.arch);
  const int n_layers = static_cast<int>(spans.size());
  if (cotangents.rows() != tape.batch() || cotangents.cols() != tape.arch.output_dim)
    throw ConfigError("backward: cotangent shape mismatch");

  Gradients g;
  g.param_grad.assign(tape.params.size(), 0.0);

  Matrix dz = cotangents;  // gradient wrt the linear output of the current layer
  for (int l = n_layers - 1; l >= 0; --l) {
    const LayerSpan& s = spans[l];
    Eigen::Map<const Matrix> W(tape.params.data() + s.w_offset, s.out, s.in);
    const Matrix& a_prev = tape.activations[l];

    Eigen::Map<Matrix>(g.param_grad.data() + s.w_offset, s.out, s.in) = dz.transpose() * a_prev;
    Eigen::Map<Eigen::RowVectorXd>(g.param_grad.data() + s.b_offset, s.out) = dz.colwise().sum();

    Matrix da = dz * W;
    if (l > 0) {
      dz = da.cwiseProduct(activation_grad(a_prev, tape.arch.hidden_activation));
    } else {
      g.input_grad = std::move(da);
    }
  }
  return g;
}

Gradients backward(GradientTape& tape, std::span<const double> cotangent) {
  Matrix c = Eigen::Map<const Eigen::RowVectorXd>(cotangent.data(), cotangent.size());
  return backward(tape, c);
}

Matrix backward_input_only(GradientTape& tape, const Matrix& cotangents) {
  if (tape.consumed) throw ConfigError("backward: tape already consumed");
  tape.consumed = true;

  const auto spans = layer_spans(tape.arch);
  if (cotangents.rows() != tape.batch() || cotangents.cols() != tape.arch.output_dim)
    throw ConfigError("backward: cotangent shape mismatch");

  Matrix dz = cotangents;
  for (int l = static_cast<int>(spans.size()) - 1; l >= 0; --l) {
    const LayerSpan& s = spans[l];
    Eigen::Map<const Matrix> W(tape.params.data() + s.w_offset, s.out, s.in);
    Matrix da = dz * W;
    if (l == 0) return da;
    dz = da.cwiseProduct(activation_grad(tape.activations[l], tape.arch.hidden_activation));
  }
  return dz;
}

ParamVector init_params(const MlpArchitecture& arch, std::uint64_t seed) {
  validate(arch);
  ParamVector params(param_count(arch));
  Rng rng(seed);
  for (const LayerSpan& s : layer_spans(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    for (std::size_t i = s.w_offset; i < s.b_offset + static_cast<std::size_t>(s.out); ++i)
      params[i] = rng.uniform(-bound, bound);
  }
  return params;
}

double gradient_check(const MlpArchitecture& arch, const ParamVector& params,
                      std::span<const double> input, std::span<const double> cotangent,
                      double h) {
  auto [out, tape] = forward_tape(arch, params, input);
  const Gradients g = backward(tape, cotangent);

  const auto objective = [&](const ParamVector& p) {
    const auto y = forward(arch, p, input);
    double v = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) v += cotangent[i] * y[i];
    return v;
  };

  double worst = 0.0;
  ParamVector p = params;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double orig = p[j];
    p[j] = orig + h;
    const double fp = objective(p);
    p[j] = orig - h;
    const double fm = objective(p);
    p[j] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double rel = std::abs(fd - g.param_grad[j]) / std::max(1.0, std::abs(g.param_grad[j]));
    worst = std::max(worst, rel);
  }
  return worst;
}

double gradient_check_suite(int n_cases, std::uint64_t seed, double h) {
  Rng rng(seed);
  double worst = 0.0;
  for (int c = 0; c < n_cases; ++c) {
    MlpArchitecture arch;
    arch.input_dim = 1 + static_cast<int>(rng.next_below(6));
    arch.output_dim = 1 + static_cast<int>(rng.next_below(4));
    const int depth = static_cast<int>(rng.next_below(3));
    for (int l = 0; l < depth; ++l)
      arch.hidden_sizes.push_back(2 + static_cast<int>(rng.next_below(15)));
    arch.hidden_activation = (rng.uniform() < 0.5) ? Activation::Tanh : Activation::ReLU;

    ParamVector params = init_params(arch, rng.next_u64());
    std::vector<double> input(arch.input_dim), cotangent(arch.output_dim);
    for (auto& v : input) v = rng.normal();
    for (auto& v : cotangent) v = rng.normal();

    worst = std::max(worst, gradient_check(arch, params, input, cotangent, h));
  }
  return worst;
}

}  // namespace upswing::nn
