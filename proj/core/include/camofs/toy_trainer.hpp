#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "camofs/composite_loss.hpp"
#include "camofs/roi_features.hpp"

namespace camofs {

// Synthetic stand-in for camouflage RoI features: per class, foreground
// cells cluster around a unit mean direction and background cells around the
// same direction nudged by separation * (unit offset), both with Gaussian
// noise. Small separation keeps the two barely distinguishable.
struct SyntheticTask {
    int num_classes = 2;
    int dim = 8;
    int patches_per_class = 8;
    int patch_h = 4;
    int patch_w = 4;
    double separation = 0.05;
    double noise = 0.1;
    std::uint64_t seed = 7;
};

struct LabeledPatch {
    int class_id = 0;
    RoIFeaturePatch patch;
    InstanceMask mask;  // 1-bits mark foreground cells; never all-0 or all-1
};

std::vector<LabeledPatch> generate(const SyntheticTask& task);

struct TrainReport {
    std::vector<double> loss_trace;
    std::map<int, double> initial_gap;  // per class: mean cos-sim(avg, fg) - mean cos-sim(avg, bg)
    std::map<int, double> final_gap;
    double initial_gap_mean = 0.0;
    double final_gap_mean = 0.0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double loss_ratio = -1.0;  // final / initial, -1 when initial is 0
    int steps = 0;
    double wall_seconds = 0.0;
};

// Fits a dim x dim projection (identity-initialized) by full-batch gradient
// descent on base(0) + alpha * triplet + beta * memory. Each step projects
// every cell, partitions by mask, queries each patch's foreground mean
// against its class bank, then refreshes the banks with the step's detached
// projected features (the loss always sees the pre-step bank, which is
// warm-started from the identity projection). Aborts with the step index if
// the loss turns non-finite.
TrainReport train(const SyntheticTask& task, const CompositeConfig& cfg, int steps = 200,
                  double lr = 0.1);

std::string report_to_json(const TrainReport& report);
std::string trace_to_csv(const TrainReport& report);

}  // namespace camofs
