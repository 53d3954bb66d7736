#include "camofs/roi_features.hpp"

#include <cmath>
#include <cstddef>
#include <string>

namespace camofs {

namespace {

void require_mask_shape(const InstanceMask& mask) {
    if (mask.height < 1 || mask.width < 1) {
        throw std::invalid_argument("mask dimensions must be positive");
    }
    const auto expected = static_cast<std::size_t>(mask.height) * static_cast<std::size_t>(mask.width);
    if (mask.bits.size() != expected) {
        throw std::invalid_argument("mask bit count " + std::to_string(mask.bits.size()) +
                                    " does not match " + std::to_string(mask.height) + "x" +
                                    std::to_string(mask.width));
    }
    for (std::uint8_t b : mask.bits) {
        if (b > 1) throw std::invalid_argument("mask bits must be 0 or 1");
    }
}

}  // namespace

FgBgPartition group_by_mask(const std::vector<ad::Vector>& locations, const InstanceMask& mask) {
    require_mask_shape(mask);
    const auto cells = static_cast<std::size_t>(mask.height) * static_cast<std::size_t>(mask.width);
    if (locations.size() != cells) {
        throw std::invalid_argument("location count " + std::to_string(locations.size()) +
                                    " does not match mask cell count " + std::to_string(cells));
    }

    FgBgPartition part;
    for (std::size_t i = 0; i < cells; ++i) {
        if (mask.bits[i]) {
            part.fg.push_back(locations[i]);
        } else {
            part.bg.push_back(locations[i]);
        }
    }
    if (part.fg.empty()) {
        throw EmptyForegroundError("mask selects no foreground locations");
    }
    part.avg = ad::mean_vector(part.fg);
    return part;
}

FgBgPartition partition(ad::Tape& tape, const RoIFeaturePatch& patch, const InstanceMask& mask) {
    if (patch.channels < 1 || patch.height < 1 || patch.width < 1) {
        throw std::invalid_argument("patch dimensions must be positive");
    }
    const auto expected = static_cast<std::size_t>(patch.channels) *
                          static_cast<std::size_t>(patch.height) *
                          static_cast<std::size_t>(patch.width);
    if (patch.data.size() != expected) {
        throw std::invalid_argument("patch data size does not match channels*height*width");
    }
    for (double v : patch.data) {
        if (!std::isfinite(v)) throw std::invalid_argument("patch contains a non-finite value");
    }
    if (mask.height != patch.height || mask.width != patch.width) {
        throw std::invalid_argument("mask " + std::to_string(mask.height) + "x" +
                                    std::to_string(mask.width) + " does not match patch " +
                                    std::to_string(patch.height) + "x" + std::to_string(patch.width));
    }

    std::vector<ad::Vector> locations;
    locations.reserve(static_cast<std::size_t>(patch.height) * static_cast<std::size_t>(patch.width));
    for (int h = 0; h < patch.height; ++h) {
        for (int w = 0; w < patch.width; ++w) {
            ad::Vector feat;
            feat.reserve(static_cast<std::size_t>(patch.channels));
            for (int c = 0; c < patch.channels; ++c) {
                feat.push_back(tape.leaf(patch.at(c, h, w)));
            }
            locations.push_back(std::move(feat));
        }
    }
    return group_by_mask(locations, mask);
}

InstanceMask downsample_mask(const InstanceMask& mask, int target_h, int target_w) {
    require_mask_shape(mask);
    if (target_h < 1 || target_w < 1) {
        throw std::invalid_argument("target dimensions must be positive");
    }

    InstanceMask out;
    out.height = target_h;
    out.width = target_w;
    out.bits.resize(static_cast<std::size_t>(target_h) * static_cast<std::size_t>(target_w));
    for (int i = 0; i < target_h; ++i) {
        const int src_h = static_cast<int>(static_cast<std::int64_t>(i) * mask.height / target_h);
        for (int j = 0; j < target_w; ++j) {
            const int src_w = static_cast<int>(static_cast<std::int64_t>(j) * mask.width / target_w);
            out.bits[static_cast<std::size_t>(i * target_w + j)] = mask.at(src_h, src_w);
        }
    }
    return out;
}

}  // namespace camofs
