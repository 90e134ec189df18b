#include "gsteal/optim.hpp"

#include <cmath>

#include "gsteal/errors.hpp"

namespace gsteal {

AdamState AdamState::init(const std::vector<Tensor>& params, AdamConfig cfg) {
    AdamState s;
    s.config = cfg;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor& p : params) {
        s.m.push_back(Tensor::zeros(p.shape()));
        s.v.push_back(Tensor::zeros(p.shape()));
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw DimensionError("adam_step: parameter/gradient/state count mismatch");
    state.step += 1;
    const AdamConfig& c = state.config;
    double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p].same_shape(grads[p]))
            throw DimensionError("adam_step: gradient shape mismatch");
        double* w = params[p].data();
        const double* g = grads[p].data();
        double* m = state.m[p].data();
        double* v = state.v[p].data();
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            w[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

}  // namespace gsteal
