#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cbfrl/environment.hpp"

namespace cbfrl::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Dense {
    Matrix weight;  // out x in
    Vector bias;
};

// Activations of one forward pass, kept for backpropagation. inputs[i] is the
// input of layer i; hidden layers use tanh.
struct Tape {
    std::vector<Matrix> inputs;
};

// Fully connected network, tanh hidden units, linear output. Samples are columns.
class Mlp {
public:
    Mlp() = default;
    // Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Mlp(const std::vector<int>& sizes, Rng& rng);

    static Mlp zeros_like(const Mlp& other);

    int input_size() const { return static_cast<int>(layers.front().weight.cols()); }
    int output_size() const { return static_cast<int>(layers.back().weight.rows()); }
    std::vector<int> sizes() const;

    Matrix forward(const Matrix& x) const;
    Matrix forward(const Matrix& x, Tape& tape) const;

    // Propagates dL/d(output) back through the tape. Parameter gradients are
    // accumulated into `grads` when given; returns dL/d(input).
    Matrix backward(const Tape& tape, const Matrix& grad_out, Mlp* grads) const;

    std::size_t parameter_count() const;
    std::vector<double> flat() const;
    void assign_flat(std::span<const double> values);
    void set_zero();
    bool all_finite() const;

    // this <- (1 - tau) this + tau source
    void polyak_from(const Mlp& source, double tau);

    std::vector<Dense> layers;
};

// Elementwise tanh written through exp, which Eigen vectorizes for doubles.
Matrix tanh_activation(const Matrix& z);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam() = default;
    Adam(const Mlp& shape, AdamConfig cfg);

    void step(Mlp& params, const Mlp& grads);

private:
    AdamConfig cfg_;
    Mlp m_;
    Mlp v_;
    long t_ = 0;
};

// Adam for a single scalar parameter.
class ScalarAdam {
public:
    explicit ScalarAdam(AdamConfig cfg = {}) : cfg_(cfg) {}
    void step(double& param, double grad);

private:
    AdamConfig cfg_;
    double m_ = 0.0;
    double v_ = 0.0;
    long t_ = 0;
};

}  // namespace cbfrl::nn
