#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace upswing::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { Tanh, ReLU };

// Fixed MLP shape; hidden layers use hidden_activation, the output layer is linear.
struct MlpArchitecture {
  int input_dim = 1;
  std::vector<int> hidden_sizes;
  int output_dim = 1;
  Activation hidden_activation = Activation::Tanh;

  std::vector<int> layer_dims() const;  // [input, hidden..., output]
  bool operator==(const MlpArchitecture&) const = default;
};

void validate(const MlpArchitecture& arch);

// Flat parameter layout, per layer: weights row-major (fan_out x fan_in), then biases.
using ParamVector = std::vector<double>;

std::size_t param_count(const MlpArchitecture& arch);

struct LayerSpan {
  int in = 0, out = 0;
  std::size_t w_offset = 0, b_offset = 0;
};
std::vector<LayerSpan> layer_spans(const MlpArchitecture& arch);

struct LayerParams {
  Matrix W;
  Eigen::VectorXd b;
};
std::vector<LayerParams> unflatten(const MlpArchitecture& arch, const ParamVector& flat);
ParamVector flatten(const MlpArchitecture& arch, const std::vector<LayerParams>& layers);

// Record of one forward pass; single consumer, backward() invalidates it.
struct GradientTape {
  MlpArchitecture arch;
  ParamVector params;
  std::vector<Matrix> activations;  // [0] = inputs, then post-activation per layer
  bool consumed = false;

  int batch() const { return activations.empty() ? 0 : static_cast<int>(activations[0].rows()); }
};

// Batched forward over rows of X (n x input_dim).
Matrix forward_batch(const MlpArchitecture& arch, const ParamVector& params, const Matrix& X);
std::pair<Matrix, GradientTape> forward_batch_tape(const MlpArchitecture& arch,
                                                   const ParamVector& params, const Matrix& X);

std::vector<double> forward(const MlpArchitecture& arch, const ParamVector& params,
                            std::span<const double> input);
std::pair<std::vector<double>, GradientTape> forward_tape(const MlpArchitecture& arch,
                                                          const ParamVector& params,
                                                          std::span<const double> input);

// Exact reverse-mode gradients of sum_i cotangent_i . output_i.
// param_grad is summed over the batch; input_grad has one row per sample.
struct Gradients {
  ParamVector param_grad;
  Matrix input_grad;
};
Gradients backward(GradientTape& tape, const Matrix& cotangents);
Gradients backward(GradientTape& tape, std::span<const double> cotangent);

// Input gradients only (skips the weight-gradient GEMMs); same single-use tape.
Matrix backward_input_only(GradientTape& tape, const Matrix& cotangents);

// Uniform fan-in scaled init, bound = 1/sqrt(fan_in); deterministic per seed.
ParamVector init_params(const MlpArchitecture& arch, std::uint64_t seed);

// Central finite differences of cotangent . forward() against backward(), using only
// the forward pass as reference. Returns the max relative error over parameters,
// denominator max(1, |analytic|).
double gradient_check(const MlpArchitecture& arch, const ParamVector& params,
                      std::span<const double> input, std::span<const double> cotangent,
                      double h = 1e-5);

// Runs n random (arch, params, input, cotangent) checks; returns worst relative error.
double gradient_check_suite(int n_cases, std::uint64_t seed, double h = 1e-5);

}  // namespace upswing::nn
