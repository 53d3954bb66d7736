#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace camofs {

// Column-major run-length encoding of a binary mask: counts alternate runs
// of 0s then 1s while scanning down columns, so counts[0] is the number of
// leading zeros. Sum of counts always equals height * width.
struct RunLengthMask {
    int height = 0;
    int width = 0;
    std::vector<int> counts;
};

// mask is row-major, values in {0,1}.
RunLengthMask rle_encode(const std::vector<std::uint8_t>& mask, int height, int width);
std::vector<std::uint8_t> rle_decode(const RunLengthMask& rle);

// Compact char form: per-count deltas packed 5 bits per printable character
// with a continuation bit, offset by '0'.
std::string rle_to_string(const RunLengthMask& rle);
RunLengthMask rle_from_string(const std::string& text, int height, int width);

std::int64_t rle_area(const RunLengthMask& rle);

// Even-odd scanline fill sampled at pixel centers: pixel (r, c) is inside
// when (c + 0.5, r + 0.5) falls inside the polygon; for each crossing pair
// [x_a, x_b) the filled columns are ceil(x_a - 0.5) .. ceil(x_b - 0.5) - 1.
// Multiple polygons are unioned. Each polygon is a flat [x0,y0,x1,y1,...]
// list with at least 3 vertices.
std::vector<std::uint8_t> rasterize_polygons(const std::vector<std::vector<double>>& polygons,
                                             int height, int width);

std::int64_t mask_intersection(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);
std::int64_t mask_union(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

}  // namespace camofs
