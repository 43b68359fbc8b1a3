#include "aac/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <type_traits>

namespace aac::nn {

std::string_view to_string(Activation a) {
    return a == Activation::Selu ? "selu" : "silu";
}

Activation activation_from_string(std::string_view name) {
    if (name == "selu") return Activation::Selu;
    if (name == "silu") return Activation::Silu;
    throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double x) {
    if (a == Activation::Selu) return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x);
    return x / (1.0 + std::exp(-x));
}

double activate_derivative(Activation a, double x) {
    if (a == Activation::Selu) return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

std::size_t MlpParameters::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

bool MlpParameters::same_shape(const MlpParameters& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weight.rows() != other.layers[i].weight.rows() ||
            layers[i].weight.cols() != other.layers[i].weight.cols() ||
            layers[i].bias.size() != other.layers[i].bias.size())
            return false;
    }
    return true;
}

bool MlpParameters::all_finite() const {
    for (const auto& l : layers)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

MlpParameters MlpParameters::zeros_like() const {
    MlpParameters z;
    z.activation = activation;
    z.layers.reserve(layers.size());
    for (const auto& l : layers)
        z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return z;
}

std::vector<int> mlp_widths(int input_dim, int output_dim, int hidden_width, int hidden_layers) {
    std::vector<int> w{input_dim};
    for (int i = 0; i < hidden_layers; ++i) w.push_back(hidden_width);
    w.push_back(output_dim);
    return w;
}

MlpParameters make_mlp(const std::vector<int>& widths, Activation activation, std::mt19937_64& rng) {
    require(widths.size() >= 2, "an MLP needs at least input and output widths");
    MlpParameters p;
    p.activation = activation;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const int fan_in = widths[i];
        const int fan_out = widths[i + 1];
        require(fan_in > 0 && fan_out > 0, "layer widths must be positive");
        // LeCun normal.
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
        DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

namespace {

// Vectorized forms of activate / activate_derivative over a whole layer.
Matrix activate_all(Activation a, const Matrix& z) {
    const auto x = z.array();
    if (a == Activation::Selu) {
        const auto negative = kSeluAlpha * (x.min(0.0).exp() - 1.0);
        return (kSeluLambda * (x > 0.0).select(x, negative)).matrix();
    }
    return (x / (1.0 + (-x).exp())).matrix();
}

Matrix activate_derivative_all(Activation a, const Matrix& z) {
    const auto x = z.array();
    if (a == Activation::Selu) {
        const auto negative = kSeluAlpha * x.min(0.0).exp();
        return (kSeluLambda * (x > 0.0).select(Matrix::Ones(z.rows(), z.cols()).array(), negative)).matrix();
    }
    const Eigen::ArrayXXd s = 1.0 / (1.0 + (-x).exp());
    return (s * (1.0 + x * (1.0 - s))).matrix();
}

}  // namespace

Matrix forward_batch(const MlpParameters& params, const Matrix& inputs, ForwardCache* cache) {
    require(!params.layers.empty(), "empty network");
    require(inputs.rows() == params.input_dim(), "input length does not match the first layer");
    if (cache) {
        cache->inputs.clear();
        cache->preactivations.clear();
    }
    Matrix x = inputs;
    const std::size_t last = params.layers.size() - 1;
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        const auto& layer = params.layers[i];
        Matrix z = layer.weight * x;
        z.colwise() += layer.bias;
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->preactivations.push_back(z);
        }
        if (i == last) return z;
        x = activate_all(params.activation, z);
    }
    return x;
}

Vector forward(const MlpParameters& params, const Vector& input) {
    return forward_batch(params, input);
}

Gradients backward(const MlpParameters& params, const ForwardCache& cache, const Matrix& upstream) {
    const std::size_t n_layers = params.layers.size();
    require(cache.inputs.size() == n_layers && cache.preactivations.size() == n_layers,
            "forward cache does not match the network");
    require(upstream.rows() == params.output_dim() && upstream.cols() == cache.inputs.front().cols(),
            "upstream gradient shape mismatch");

    Gradients g{params.zeros_like(), Matrix()};
    Matrix delta = upstream;  // gradient w.r.t. the current layer's preactivation
    for (std::size_t k = n_layers; k-- > 0;) {
        const auto& layer = params.layers[k];
        g.params.layers[k].weight.noalias() = delta * cache.inputs[k].transpose();
        g.params.layers[k].bias = delta.rowwise().sum();
        Matrix back = layer.weight.transpose() * delta;
        if (k == 0) {
            g.input = std::move(back);
        } else {
            const auto& z = cache.preactivations[k - 1];
            delta = back.cwiseProduct(activate_derivative_all(params.activation, z));
        }
    }
    return g;
}

Gradients gradients(const MlpParameters& params, const Vector& input, const Vector& upstream) {
    ForwardCache cache;
    forward_batch(params, input, &cache);
    return backward(params, cache, upstream);
}

OptimizerState OptimizerState::for_params(const MlpParameters& params, double learning_rate) {
    OptimizerState s;
    s.first_moment = params.zeros_like();
    s.second_moment = params.zeros_like();
    s.learning_rate = learning_rate;
    return s;
}

namespace {

template <typename Param, typename Grad, typename Moment>
void adam_apply(Param& p, const Grad& g, Moment& m, Moment& v, const OptimizerState& opt, double c1, double c2) {
    m = opt.beta1 * m + (1.0 - opt.beta1) * g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
    p.array() -= opt.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.eps);
}

}  // namespace

void adam_step(MlpParameters& params, const MlpParameters& grads, OptimizerState& opt) {
    require(params.same_shape(grads) && params.same_shape(opt.first_moment) && params.same_shape(opt.second_moment),
            "optimizer shapes do not match parameters");
    ++opt.step;
    const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        adam_apply(params.layers[i].weight, grads.layers[i].weight, opt.first_moment.layers[i].weight,
                   opt.second_moment.layers[i].weight, opt, c1, c2);
        adam_apply(params.layers[i].bias, grads.layers[i].bias, opt.first_moment.layers[i].bias,
                   opt.second_moment.layers[i].bias, opt, c1, c2);
    }
}

double ScalarAdam::update(double value, double grad) {
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(step)));
    const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(step)));
    return value - learning_rate * m_hat / (std::sqrt(v_hat) + eps);
}

void polyak_update(MlpParameters& target, const MlpParameters& online, double tau) {
    require(target.same_shape(online), "polyak update between differently shaped networks");
    for (std::size_t i = 0; i < target.layers.size(); ++i) {
        auto& t = target.layers[i];
        const auto& o = online.layers[i];
        t.weight = tau * o.weight + (1.0 - tau) * t.weight;
        t.bias = tau * o.bias + (1.0 - tau) * t.bias;
    }
}

double max_abs_difference(const MlpParameters& a, const MlpParameters& b) {
    require(a.same_shape(b), "comparing differently shaped networks");
    double d = 0.0;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        d = std::max(d, (a.layers[i].weight - b.layers[i].weight).cwiseAbs().maxCoeff());
        d = std::max(d, (a.layers[i].bias - b.layers[i].bias).cwiseAbs().maxCoeff());
    }
    return d;
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[8] = {'A', 'A', 'C', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    is.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!is) throw InvalidInput("truncated checkpoint");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const std::vector<Matrix>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open checkpoint for writing: " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rows()));
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.cols()));
    }
    for (const auto& t : tensors)
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) put_le<double>(os, t(r, c));
}

std::vector<Matrix> read_tensors(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open checkpoint: " + path.string());
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw InvalidInput("not a checkpoint file");
    const auto count = get_le<std::uint32_t>(is);
    std::vector<Matrix> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto rows = get_le<std::uint32_t>(is);
        const auto cols = get_le<std::uint32_t>(is);
        tensors.emplace_back(rows, cols);
    }
    for (auto& t : tensors)
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = get_le<double>(is);
    return tensors;
}

void append_tensors(const MlpParameters& params, std::vector<Matrix>& out) {
    for (const auto& l : params.layers) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
}

std::size_t load_tensors(MlpParameters& params, const std::vector<Matrix>& tensors, std::size_t offset) {
    for (auto& l : params.layers) {
        require(offset + 2 <= tensors.size(), "checkpoint has too few tensors");
        const auto& w = tensors[offset];
        const auto& b = tensors[offset + 1];
        require(w.rows() == l.weight.rows() && w.cols() == l.weight.cols() && b.rows() == l.bias.size() &&
                    b.cols() == 1,
                "checkpoint tensor shape does not match the network");
        l.weight = w;
        l.bias = b.col(0);
        offset += 2;
    }
    return offset;
}

}  // namespace aac::nn
