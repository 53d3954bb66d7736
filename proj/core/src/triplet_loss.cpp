#include "camofs/triplet_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace camofs {

namespace {

void require_config(const TripletConfig& cfg) {
    if (!(cfg.margin >= 0.0 && cfg.margin <= 2.0)) {
        throw std::invalid_argument("triplet margin must lie in [0, 2]");
    }
    if (!std::isfinite(cfg.alpha)) {
        throw std::invalid_argument("triplet alpha must be finite");
    }
}

ad::Scalar mean_distance(const ad::Vector& anchor, const std::vector<ad::Vector>& members) {
    std::vector<ad::Scalar> dists;
    dists.reserve(members.size());
    for (const ad::Vector& m : members) {
        dists.push_back(ad::cosine_distance(anchor, m));
    }
    return ad::mean(dists);
}

}  // namespace

ad::Scalar triplet_loss(const FgBgPartition& part, const TripletConfig& cfg) {
    require_config(cfg);
    if (part.fg.empty()) throw std::invalid_argument("triplet_loss: no foreground vectors");
    if (part.bg.empty()) throw std::invalid_argument("triplet_loss: no background vectors");

    ad::Scalar pos = mean_distance(part.avg, part.fg);
    ad::Scalar neg = mean_distance(part.avg, part.bg);
    return ad::relu(pos - neg + cfg.margin);
}

ad::Scalar batch_triplet_loss(const std::vector<FgBgPartition>& parts, const TripletConfig& cfg) {
    require_config(cfg);
    std::vector<ad::Scalar> losses;
    losses.reserve(parts.size());
    for (const FgBgPartition& part : parts) {
        if (part.fg.empty() || part.bg.empty()) continue;
        losses.push_back(triplet_loss(part, cfg));
    }
    if (losses.empty()) {
        throw std::invalid_argument("batch_triplet_loss: no eligible partitions");
    }
    return ad::mean(losses);
}

}  // namespace camofs
