#include "camofs/composite_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace camofs {

ad::Scalar final_loss(const BaseLossTerm& base, std::optional<ad::Scalar> l_triplet,
                      std::optional<ad::Scalar> l_memory, const CompositeConfig& cfg) {
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) {
        throw std::invalid_argument("final_loss: alpha must be finite and non-negative");
    }
    if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) {
        throw std::invalid_argument("final_loss: beta must be finite and non-negative");
    }
    if (!std::isfinite(base.value.value())) {
        throw std::invalid_argument("final_loss: base term is not finite");
    }
    if (l_triplet && !std::isfinite(l_triplet->value())) {
        throw std::invalid_argument("final_loss: triplet term is not finite");
    }
    if (l_memory && !std::isfinite(l_memory->value())) {
        throw std::invalid_argument("final_loss: memory term is not finite");
    }

    ad::Scalar total = base.value;
    if (l_triplet) total = total + cfg.alpha * *l_triplet;
    if (l_memory) total = total + cfg.beta * *l_memory;
    return total;
}

}  // namespace camofs
