#include "dgcf/adam.hpp"

#include <cmath>

#include "dgcf/error.hpp"

namespace dgcf {

void adam_step(const std::vector<DenseMatrix*>& params,
               const std::vector<const DenseMatrix*>& grads,
               AdamState& state) {
    if (params.size() != grads.size())
        throw ContractError("adam_step: " + std::to_string(params.size()) + " params vs " +
                            std::to_string(grads.size()) + " grads");
    if (state.m.empty() && state.v.empty()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const DenseMatrix* p : params) {
            state.m.emplace_back(p->rows, p->cols);
            state.v.emplace_back(p->rows, p->cols);
        }
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ContractError("adam_step: moment list length does not match parameter list");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (size_t i = 0; i < params.size(); ++i) {
        DenseMatrix& p = *params[i];
        const DenseMatrix& g = *grads[i];
        DenseMatrix& m = state.m[i];
        DenseMatrix& v = state.v[i];
        if (!p.same_shape(g) || !p.same_shape(m))
            throw DimensionError("adam_step tensor " + std::to_string(i) + ": param " + p.shape_str() +
                                 " grad " + g.shape_str() + " moment " + m.shape_str());
        for (size_t k = 0; k < p.data.size(); ++k) {
            const double gk = g.data[k];
            m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * gk;
            v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * gk * gk;
            const double mhat = m.data[k] / bc1;
            const double vhat = v.data[k] / bc2;
            p.data[k] -= state.learning_rate *
                         (mhat / (std::sqrt(vhat) + state.epsilon) + state.weight_decay * p.data[k]);
        }
    }
}

} // namespace dgcf
