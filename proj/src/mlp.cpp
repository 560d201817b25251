#include "cbfrl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace cbfrl::nn {

Matrix tanh_activation(const Matrix& z) {
    const Eigen::ArrayXXd e = (2.0 * z.array()).exp();
    return (1.0 - 2.0 / (e + 1.0)).matrix();
}

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const int in = sizes[i];
        const int out = sizes[i + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Dense layer{Matrix(out, in), Vector(out)};
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = dist(rng);
        layers.push_back(std::move(layer));
    }
}

Mlp Mlp::zeros_like(const Mlp& other) {
    Mlp z = other;
    z.set_zero();
    return z;
}

std::vector<int> Mlp::sizes() const {
    std::vector<int> s{input_size()};
    for (const auto& l : layers) s.push_back(static_cast<int>(l.weight.rows()));
    return s;
}

Matrix Mlp::forward(const Matrix& x) const {
    Matrix a = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Matrix z = layers[i].weight * a;
        z.colwise() += layers[i].bias;
        a = (i + 1 < layers.size()) ? tanh_activation(z) : std::move(z);
    }
    return a;
}

Matrix Mlp::forward(const Matrix& x, Tape& tape) const {
    tape.inputs.resize(layers.size());
    tape.inputs[0] = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Matrix z = layers[i].weight * tape.inputs[i];
        z.colwise() += layers[i].bias;
        if (i + 1 < layers.size()) tape.inputs[i + 1] = tanh_activation(z);
        else return z;
    }
    return {};
}

Matrix Mlp::backward(const Tape& tape, const Matrix& grad_out, Mlp* grads) const {
    Matrix g = grad_out;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const Matrix& input = tape.inputs[k];
        if (grads) {
            grads->layers[k].weight.noalias() += g * input.transpose();
            grads->layers[k].bias += g.rowwise().sum();
        }
        Matrix up = layers[k].weight.transpose() * g;
        if (k > 0) up.array() *= 1.0 - input.array().square();
        g = std::move(up);
    }
    return g;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<double> Mlp::flat() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers) {
        out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
        out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return out;
}

void Mlp::assign_flat(std::span<const double> values) {
    if (values.size() != parameter_count()) throw std::invalid_argument("assign_flat: size mismatch");
    std::size_t k = 0;
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = values[k++];
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = values[k++];
    }
}

void Mlp::set_zero() {
    for (auto& l : layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
}

bool Mlp::all_finite() const {
    for (const auto& l : layers)
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
}

void Mlp::polyak_from(const Mlp& source, double tau) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weight = (1.0 - tau) * layers[i].weight + tau * source.layers[i].weight;
        layers[i].bias = (1.0 - tau) * layers[i].bias + tau * source.layers[i].bias;
    }
}

Adam::Adam(const Mlp& shape, AdamConfig cfg)
    : cfg_(cfg), m_(Mlp::zeros_like(shape)), v_(Mlp::zeros_like(shape)) {}

void Adam::step(Mlp& params, const Mlp& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double step = cfg_.lr * std::sqrt(c2) / c1;
    const double eps = cfg_.eps * std::sqrt(c2);
    auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
        m.array() = cfg_.beta1 * m.array() + (1.0 - cfg_.beta1) * g.array();
        v.array() = cfg_.beta2 * v.array() + (1.0 - cfg_.beta2) * g.array().square();
        p.array() -= step * m.array() / (v.array().sqrt() + eps);
    };
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        update(params.layers[i].weight, m_.layers[i].weight, v_.layers[i].weight, grads.layers[i].weight);
        update(params.layers[i].bias, m_.layers[i].bias, v_.layers[i].bias, grads.layers[i].bias);
    }
}

void ScalarAdam::step(double& param, double grad) {
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad * grad;
    const double m_hat = m_ / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const double v_hat = v_ / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    param -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
}

}  // namespace cbfrl::nn
