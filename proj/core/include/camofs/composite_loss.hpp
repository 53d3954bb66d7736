#pragma once

#include <optional>

#include "camofs/autodiff.hpp"
#include "camofs/memory_bank.hpp"
#include "camofs/triplet_loss.hpp"

namespace camofs {

struct CompositeConfig {
    double alpha = 1e-1;
    double beta = 1e-2;
    TripletConfig triplet;
    MemoryConfig memory;
};

// Opaque framework loss injected by the caller; never computed here.
struct BaseLossTerm {
    ad::Scalar value;
};

// base + alpha * triplet + beta * memory. A disengaged term contributes
// exactly 0 so batch-degenerate steps stay well-defined. Gradients propagate
// into every present term.
ad::Scalar final_loss(const BaseLossTerm& base, std::optional<ad::Scalar> l_triplet,
                      std::optional<ad::Scalar> l_memory, const CompositeConfig& cfg);

}  // namespace camofs
