#pragma once

#include <vector>

#include "camofs/autodiff.hpp"
#include "camofs/roi_features.hpp"

namespace camofs {

struct TripletConfig {
    double margin = 0.5;  // valid range [0, 2], the span of cosine distance
    double alpha = 1e-1;  // composite-objective weight carried alongside
};

// Hinged separation between mean anchor-to-foreground and mean
// anchor-to-background cosine distance:
//   max(mean_i d(avg, fg_i) - mean_j d(avg, bg_j) + margin, 0).
// The subgradient at the hinge point is 0. Requires both sets non-empty.
ad::Scalar triplet_loss(const FgBgPartition& part, const TripletConfig& cfg);

// Unweighted mean of triplet_loss over the eligible partitions (those with
// at least one foreground and one background vector). Partitions without a
// background are skipped; throws if none are eligible.
ad::Scalar batch_triplet_loss(const std::vector<FgBgPartition>& parts, const TripletConfig& cfg);

}  // namespace camofs
