#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "gsteal/rng.hpp"
#include "gsteal/tape.hpp"

namespace gsteal::test {

// Finite-difference gradient oracle: rebuilds the computation per
// perturbation and compares central differences against the tape's reverse
// pass. `build` must construct a scalar loss from leaf vars in input order.
struct GradCheck {
    double h = 1e-5;
    double tol = 1e-4;

    using BuildFn = std::function<Var(Tape&, const std::vector<Var>&)>;

    // Returns the worst relative error seen; fails the caller's tolerance
    // check if any element disagrees.
    double run(std::vector<Tensor> inputs, const BuildFn& build) const {
        Tape tape;
        std::vector<Var> leaves;
        leaves.reserve(inputs.size());
        for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, true));
        Var loss = build(tape, leaves);
        tape.backward(loss);
        std::vector<Tensor> analytic;
        analytic.reserve(leaves.size());
        for (const Var& v : leaves) analytic.push_back(v.grad());

        double worst = 0.0;
        for (std::size_t p = 0; p < inputs.size(); ++p) {
            for (std::size_t i = 0; i < inputs[p].size(); ++i) {
                double saved = inputs[p].values()[i];
                inputs[p].values()[i] = saved + h;
                double up = eval(inputs, build);
                inputs[p].values()[i] = saved - h;
                double down = eval(inputs, build);
                inputs[p].values()[i] = saved;
                double numeric = (up - down) / (2.0 * h);
                double a = analytic[p].values()[i];
                double rel = std::abs(a - numeric) /
                             std::max({1.0, std::abs(a), std::abs(numeric)});
                worst = std::max(worst, rel);
            }
        }
        return worst;
    }

private:
    static double eval(const std::vector<Tensor>& inputs, const BuildFn& build) {
        Tape tape;
        std::vector<Var> leaves;
        leaves.reserve(inputs.size());
        for (const Tensor& t : inputs) leaves.push_back(tape.leaf(t, false));
        return build(tape, leaves).value().data()[0];
    }
};

// Collapses an arbitrary tensor to a scalar with elementwise probe weights,
// so full Jacobians are exercised through a single reverse pass.
inline Var probe_sum(Tape& tape, Var x, const std::vector<double>& weights) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.value().size(); ++i)
        total += weights[i] * x.value().data()[i];
    return tape.custom_op(
        Tensor::scalar(total), {x},
        [weights](const Tensor& grad_out, const std::vector<Var>&,
                  const std::vector<Tensor*>& parent_grads) {
            double g = grad_out.data()[0];
            for (std::size_t i = 0; i < weights.size(); ++i)
                parent_grads[0]->values()[i] += g * weights[i];
        });
}

inline Tensor random_tensor(Pcg32& rng, std::size_t rows, std::size_t cols,
                            double lo = -2.0, double hi = 2.0) {
    Tensor t = Tensor::zeros({rows, cols});
    for (double& v : t.values()) v = rng.uniform_range(lo, hi);
    return t;
}

// Random tensor kept away from zero (for kinked ops like relu).
inline Tensor random_tensor_away_from(Pcg32& rng, std::size_t rows, std::size_t cols,
                                      double margin) {
    Tensor t = random_tensor(rng, rows, cols);
    for (double& v : t.values()) {
        if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
    }
    return t;
}

inline std::vector<double> random_weights(Pcg32& rng, std::size_t n) {
    std::vector<double> w(n);
    for (double& v : w) v = rng.uniform_range(-1.0, 1.0);
    return w;
}

}  // namespace gsteal::test
