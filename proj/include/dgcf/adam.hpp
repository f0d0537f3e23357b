// Adam optimizer state over an ordered tensor list. Weight decay is the
// decoupled form: it scales the parameter directly instead of entering the
// moment estimates, and callers apply it to weights only.
#pragma once

#include <cstdint>
#include <vector>

#include "dgcf/tensor.hpp"

namespace dgcf {

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    int64_t step = 0;
    std::vector<DenseMatrix> m; // first moments, parallel to the parameter order
    std::vector<DenseMatrix> v; // second moments
};

// One update over all tensors. params and grads must be parallel lists with
// matching shapes; moments are created on the first call and must match
// afterwards. The traversal order is the list order, so updates are
// deterministic for a fixed parameter enumeration.
void adam_step(const std::vector<DenseMatrix*>& params,
               const std::vector<const DenseMatrix*>& grads,
               AdamState& state);

} // namespace dgcf
