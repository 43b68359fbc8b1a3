#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string_view>
#include <vector>

#include "aac/core.hpp"

namespace aac::nn {

enum class Activation { Selu, Silu };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double activate(Activation a, double x);
double activate_derivative(Activation a, double x);

/// y = W x + b, with W shaped (out, in).
struct DenseLayer {
    Matrix weight;
    Vector bias;
};

/// Fully connected network: activation after every hidden layer, linear output.
struct MlpParameters {
    std::vector<DenseLayer> layers;
    Activation activation = Activation::Selu;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
    std::size_t parameter_count() const;
    bool same_shape(const MlpParameters& other) const;
    bool all_finite() const;

    /// Zero-valued parameters with this network's shape.
    MlpParameters zeros_like() const;
};

/// Layer widths from input to output, e.g. {in, 128, 128, 128, out}.
MlpParameters make_mlp(const std::vector<int>& widths, Activation activation, std::mt19937_64& rng);

/// Widths for `hidden_layers` hidden layers of `hidden_width` units.
std::vector<int> mlp_widths(int input_dim, int output_dim, int hidden_width, int hidden_layers);

/// Activations kept for the backward pass; samples are columns.
struct ForwardCache {
    std::vector<Matrix> inputs;          // input to each layer
    std::vector<Matrix> preactivations;  // W x + b of each layer
};

Vector forward(const MlpParameters& params, const Vector& input);
Matrix forward_batch(const MlpParameters& params, const Matrix& inputs, ForwardCache* cache = nullptr);

struct Gradients {
    MlpParameters params;  // same shape as the network
    Matrix input;          // d(output . upstream)/d(input), one column per sample
};

/// Reverse-mode gradient of sum_over_samples(output . upstream), upstream shaped (out, batch).
Gradients backward(const MlpParameters& params, const ForwardCache& cache, const Matrix& upstream);

/// Single-sample convenience wrapper around forward_batch + backward.
Gradients gradients(const MlpParameters& params, const Vector& input, const Vector& upstream);

struct OptimizerState {
    MlpParameters first_moment;
    MlpParameters second_moment;
    std::int64_t step = 0;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static OptimizerState for_params(const MlpParameters& params, double learning_rate);
};

/// Bias-corrected adaptive-moment step, in place.
void adam_step(MlpParameters& params, const MlpParameters& grads, OptimizerState& opt);

/// Scalar version used for the entropy temperature.
struct ScalarAdam {
    double m = 0.0;
    double v = 0.0;
    std::int64_t step = 0;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    double update(double value, double grad);
};

/// target <- tau * online + (1 - tau) * target
void polyak_update(MlpParameters& target, const MlpParameters& online, double tau);

/// Largest absolute elementwise difference between two same-shaped networks.
double max_abs_difference(const MlpParameters& a, const MlpParameters& b);

// ---------------------------------------------------------------- checkpoints
//
// Layout (all integers little-endian):
//   8 bytes   magic "AACCKPT1"
//   u32       tensor count N
//   N x (u32 rows, u32 cols)
//   sum(rows*cols) little-endian IEEE-754 doubles, each tensor row-major, in header order

void write_tensors(const std::filesystem::path& path, const std::vector<Matrix>& tensors);
std::vector<Matrix> read_tensors(const std::filesystem::path& path);

/// Flattens a network to tensors (W0, b0, W1, b1, ...); biases are (n, 1).
void append_tensors(const MlpParameters& params, std::vector<Matrix>& out);
/// Reads tensors back into a network of the same shape starting at `offset`; returns the next offset.
std::size_t load_tensors(MlpParameters& params, const std::vector<Matrix>& tensors, std::size_t offset);

}  // namespace aac::nn
