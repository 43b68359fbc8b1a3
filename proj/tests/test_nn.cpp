#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "aac/nn.hpp"
#include "test_util.hpp"

using namespace aac;
using namespace aac::nn;

namespace {

Vector random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    Vector v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Largest relative error of backward() against central differences of output . upstream.
double gradient_check(const MlpParameters& net, const Vector& x, const Vector& upstream) {
    const auto g = gradients(net, x, upstream);
    const double h = 1e-5;
    double worst = 0.0;
    auto objective = [&](const MlpParameters& p, const Vector& in) { return forward(p, in).dot(upstream); };
    auto compare = [&worst](double analytic, double numeric) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (Eigen::Index i = 0; i < net.layers[l].weight.size(); ++i) {
            auto plus = net, minus = net;
            plus.layers[l].weight.data()[i] += h;
            minus.layers[l].weight.data()[i] -= h;
            compare(g.params.layers[l].weight.data()[i], (objective(plus, x) - objective(minus, x)) / (2 * h));
        }
        for (Eigen::Index i = 0; i < net.layers[l].bias.size(); ++i) {
            auto plus = net, minus = net;
            plus.layers[l].bias[i] += h;
            minus.layers[l].bias[i] -= h;
            compare(g.params.layers[l].bias[i], (objective(plus, x) - objective(minus, x)) / (2 * h));
        }
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vector plus = x, minus = x;
        plus[i] += h;
        minus[i] -= h;
        compare(g.input(i, 0), (objective(net, plus) - objective(net, minus)) / (2 * h));
    }
    return worst;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("SELU values") {
    CHECK(activate(Activation::Selu, 1.0) == doctest::Approx(1.0507009873554805));
    CHECK(activate(Activation::Selu, 0.0) == 0.0);
    CHECK(activate(Activation::Selu, -50.0) == doctest::Approx(-kSeluLambda * kSeluAlpha));
    CHECK(-kSeluLambda * kSeluAlpha == doctest::Approx(-1.7581).epsilon(1e-4));
    CHECK(activate(Activation::Silu, 0.0) == 0.0);
    CHECK(activate(Activation::Silu, 2.0) == doctest::Approx(2.0 / (1.0 + std::exp(-2.0))));
}

TEST_CASE("batched activations agree with the scalar reference") {
    std::mt19937_64 rng(1);
    for (auto act : {Activation::Selu, Activation::Silu}) {
        MlpParameters single;
        single.activation = act;
        single.layers.push_back({Matrix::Identity(5, 5), Vector::Zero(5)});
        single.layers.push_back({Matrix::Identity(5, 5), Vector::Zero(5)});
        const Vector x = 3.0 * random_vector(5, rng);
        const Vector y = forward(single, x);
        for (int i = 0; i < 5; ++i) CHECK(y[i] == doctest::Approx(activate(act, x[i])).epsilon(1e-14));
    }
}

TEST_CASE("zero network outputs zero") {
    std::mt19937_64 rng(2);
    auto net = make_mlp({4, 8, 8, 3}, Activation::Selu, rng).zeros_like();
    CHECK(forward(net, random_vector(4, rng)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("initialization is deterministic and LeCun-scaled") {
    std::mt19937_64 a(5), b(5);
    const auto n1 = make_mlp({64, 256, 1}, Activation::Selu, a);
    const auto n2 = make_mlp({64, 256, 1}, Activation::Selu, b);
    CHECK(max_abs_difference(n1, n2) == 0.0);
    const auto& w = n1.layers[0].weight;
    const double var = w.squaredNorm() / static_cast<double>(w.size());
    CHECK(var == doctest::Approx(1.0 / 64.0).epsilon(0.1));
    CHECK(n1.layers[0].bias.cwiseAbs().maxCoeff() == 0.0);
    CHECK(n1.parameter_count() == 64 * 256 + 256 + 256 + 1);
}

TEST_CASE("forward rejects a wrong input size") {
    std::mt19937_64 rng(3);
    const auto net = make_mlp({4, 8, 2}, Activation::Selu, rng);
    CHECK_THROWS_AS(forward(net, Vector::Zero(3)), InvalidInput);
    CHECK_THROWS_AS(gradients(net, Vector::Zero(4), Vector::Zero(3)), InvalidInput);
}

TEST_CASE("zero upstream gives zero gradients") {
    std::mt19937_64 rng(4);
    const auto net = make_mlp({4, 8, 8, 2}, Activation::Selu, rng);
    const auto g = gradients(net, random_vector(4, rng), Vector::Zero(2));
    CHECK(max_abs_difference(g.params, net.zeros_like()) == 0.0);
    CHECK(g.input.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer gradient is the outer product") {
    std::mt19937_64 rng(6);
    const auto net = make_mlp({3, 2}, Activation::Selu, rng);
    const Vector x = random_vector(3, rng);
    const Vector u = random_vector(2, rng);
    const auto g = gradients(net, x, u);
    const Matrix expected = u * x.transpose();
    CHECK((g.params.layers[0].weight - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((g.params.layers[0].bias - u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((g.input - net.layers[0].weight.transpose() * u).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("backpropagation matches central differences") {
    for (auto act : {Activation::Selu, Activation::Silu}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            std::mt19937_64 rng(100 + seed);
            const auto net = make_mlp({4, 8, 8, 8, 2}, act, rng);
            const double err = gradient_check(net, random_vector(4, rng), random_vector(2, rng));
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("batched backward sums per-sample gradients") {
    std::mt19937_64 rng(7);
    const auto net = make_mlp({3, 6, 6, 2}, Activation::Selu, rng);
    Matrix x(3, 4), u(2, 4);
    for (auto& v : x.reshaped()) v = std::normal_distribution<double>()(rng);
    for (auto& v : u.reshaped()) v = std::normal_distribution<double>()(rng);
    ForwardCache cache;
    forward_batch(net, x, &cache);
    const auto batched = backward(net, cache, u);
    auto summed = net.zeros_like();
    for (int c = 0; c < 4; ++c) {
        const auto g = gradients(net, x.col(c), u.col(c));
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            summed.layers[l].weight += g.params.layers[l].weight;
            summed.layers[l].bias += g.params.layers[l].bias;
        }
        CHECK((batched.input.col(c) - g.input).cwiseAbs().maxCoeff() < 1e-13);
    }
    CHECK(max_abs_difference(batched.params, summed) < 1e-12);
}

TEST_CASE("Adam: zero gradient from zero moments leaves parameters unchanged") {
    std::mt19937_64 rng(8);
    auto net = make_mlp({3, 4, 1}, Activation::Selu, rng);
    const auto before = net;
    auto opt = OptimizerState::for_params(net, 1e-3);
    adam_step(net, net.zeros_like(), opt);
    CHECK(max_abs_difference(net, before) == 0.0);
    CHECK(opt.step == 1);
}

TEST_CASE("Adam: the first step moves each parameter by the learning rate") {
    MlpParameters net;
    net.layers.push_back({Matrix::Constant(1, 1, 0.5), Vector::Zero(1)});
    auto grads = net.zeros_like();
    grads.layers[0].weight(0, 0) = 1.0;
    auto opt = OptimizerState::for_params(net, 1e-3);
    adam_step(net, grads, opt);
    CHECK(net.layers[0].weight(0, 0) - 0.5 == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("Adam: steps decay after the gradient vanishes") {
    MlpParameters net;
    net.layers.push_back({Matrix::Constant(1, 1, 0.0), Vector::Zero(1)});
    auto opt = OptimizerState::for_params(net, 1e-3);
    auto grads = net.zeros_like();
    grads.layers[0].weight(0, 0) = 1.0;
    adam_step(net, grads, opt);
    const auto zero = net.zeros_like();
    double prev_step = std::numeric_limits<double>::infinity();
    // Independent recurrence for the moments.
    double m = 0.1, v = 0.001;
    for (int k = 2; k <= 6; ++k) {
        const double before = net.layers[0].weight(0, 0);
        adam_step(net, zero, opt);
        const double step = std::abs(net.layers[0].weight(0, 0) - before);
        m *= 0.9;
        v *= 0.999;
        const double expected = 1e-3 * (m / (1 - std::pow(0.9, k))) / (std::sqrt(v / (1 - std::pow(0.999, k))) + 1e-8);
        CHECK(step == doctest::Approx(expected).epsilon(1e-9));
        CHECK(step < prev_step);
        prev_step = step;
    }
}

TEST_CASE("scalar Adam follows the same first step") {
    ScalarAdam a;
    a.learning_rate = 0.01;
    CHECK(a.update(1.0, -3.0) == doctest::Approx(1.01).epsilon(1e-9));
}

TEST_CASE("Polyak averaging") {
    std::mt19937_64 rng(9);
    const auto online = make_mlp({2, 3, 1}, Activation::Selu, rng);
    auto target = make_mlp({2, 3, 1}, Activation::Selu, rng);
    const double w_online = online.layers[0].weight(1, 1);
    const double w_target = target.layers[0].weight(1, 1);
    polyak_update(target, online, 0.005);
    CHECK(target.layers[0].weight(1, 1) == doctest::Approx(0.005 * w_online + 0.995 * w_target));

    double gap = max_abs_difference(target, online);
    for (int i = 0; i < 50; ++i) {
        polyak_update(target, online, 0.005);
        const double next = max_abs_difference(target, online);
        CHECK(next == doctest::Approx(0.995 * gap).epsilon(1e-9));
        gap = next;
    }
}

TEST_CASE("checkpoint tensors round-trip bit-exactly") {
    std::mt19937_64 rng(10);
    const auto net = make_mlp({5, 7, 3}, Activation::Selu, rng);
    std::vector<Matrix> tensors;
    append_tensors(net, tensors);
    const auto path = std::filesystem::temp_directory_path() / "aac_nn_roundtrip.bin";
    write_tensors(path, tensors);
    const auto back = read_tensors(path);
    auto copy = net.zeros_like();
    CHECK(load_tensors(copy, back, 0) == tensors.size());
    CHECK(max_abs_difference(copy, net) == 0.0);

    // Layout: magic, count, shape header, row-major doubles.
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    CHECK(std::string(magic, 8) == "AACCKPT1");
    std::uint32_t count = 0, rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    CHECK(count == 4);
    CHECK(rows == 7);
    CHECK(cols == 5);
    in.seekg(8 + 4 + 8 * 4);
    double first = 0, second = 0;
    in.read(reinterpret_cast<char*>(&first), 8);
    in.read(reinterpret_cast<char*>(&second), 8);
    CHECK(first == net.layers[0].weight(0, 0));
    CHECK(second == net.layers[0].weight(0, 1));
}

TEST_CASE("checkpoint reader rejects foreign or truncated files") {
    const auto path = std::filesystem::temp_directory_path() / "aac_nn_bad.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPT";
    }
    CHECK_THROWS_AS(read_tensors(path), InvalidInput);
    std::mt19937_64 rng(11);
    std::vector<Matrix> tensors;
    append_tensors(make_mlp({2, 2}, Activation::Selu, rng), tensors);
    write_tensors(path, tensors);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
    CHECK_THROWS_AS(read_tensors(path), InvalidInput);

    auto wrong = make_mlp({3, 2}, Activation::Selu, rng);
    CHECK_THROWS_AS(load_tensors(wrong, tensors, 0), InvalidInput);
}

}
