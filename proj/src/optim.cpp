#include "mktcube/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mktcube::ad {

OptimizerState OptimizerState::for_params(const std::vector<TensorPtr>& params, double lr) {
    OptimizerState st;
    st.learning_rate = lr;
    st.m.reserve(params.size());
    st.v.reserve(params.size());
    for (const auto& p : params) {
        st.m.push_back(Array::Zero(p->size()));
        st.v.push_back(Array::Zero(p->size()));
    }
    return st;
}

double clip_global_norm(const std::vector<TensorPtr>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        if (p->grad.size() > 0) sq += p->grad.square().sum();
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (const auto& p : params) {
            if (p->grad.size() > 0) p->grad *= scale;
        }
    }
    return norm;
}

void adam_step(const std::vector<TensorPtr>& params, OptimizerState& state) {
    if (params.size() != state.m.size() || params.size() != state.v.size()) {
        throw std::invalid_argument("adam_step: state has " + std::to_string(state.m.size()) +
                                    " slots for " + std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state.m[i].size() != params[i]->size()) {
            throw std::invalid_argument("adam_step: moment buffer shape mismatch at slot " + std::to_string(i));
        }
    }
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Array g = p.grad.size() > 0 ? p.grad : Array(Array::Zero(p.size()));
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.square();
        Array m_hat = state.m[i] / bc1;
        Array v_hat = state.v[i] / bc2;
        p.data -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
}

} // namespace mktcube::ad
