#pragma once

#include <cstdint>
#include <vector>

#include "gsteal/tensor.hpp"

namespace gsteal {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam. One first/second moment tensor per parameter tensor,
// in the same order as the parameter list it was initialized from.
struct AdamState {
    AdamConfig config;
    long step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    static AdamState init(const std::vector<Tensor>& params, AdamConfig cfg = {});
};

// In-place update: params[i] <- params[i] - lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state);

}  // namespace gsteal
