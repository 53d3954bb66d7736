#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "camofs/autodiff.hpp"

namespace camofs {

// Dense C-channel feature grid for one region of interest, stored
// channel-major: data[c * height * width + h * width + w].
struct RoIFeaturePatch {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    double at(int c, int h, int w) const {
        return data[static_cast<std::size_t>((c * height + h) * width + w)];
    }
};

// Binary mask paired with a patch; bits are row-major, 1 marks foreground.
struct InstanceMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    std::uint8_t at(int h, int w) const {
        return bits[static_cast<std::size_t>(h * width + w)];
    }
};

// Foreground/background feature split plus the foreground mean that anchors
// the losses. Every grid location lands in exactly one of fg/bg.
struct FgBgPartition {
    std::vector<ad::Vector> fg;
    std::vector<ad::Vector> bg;
    ad::Vector avg;
};

struct EmptyForegroundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Splits per-location feature vectors (row-major, one per mask bit) that
// already live on a tape. avg stays differentiable through the fg members.
FgBgPartition group_by_mask(const std::vector<ad::Vector>& locations, const InstanceMask& mask);

// Convenience entry point: lifts the raw patch onto the tape as leaves,
// then partitions. Throws EmptyForegroundError when the mask has no 1-bit.
FgBgPartition partition(ad::Tape& tape, const RoIFeaturePatch& patch, const InstanceMask& mask);

// Nearest-neighbor resampling; output bit (i, j) is taken from the source at
// (floor(i * H / target_h), floor(j * W / target_w)).
InstanceMask downsample_mask(const InstanceMask& mask, int target_h, int target_w);

}  // namespace camofs
