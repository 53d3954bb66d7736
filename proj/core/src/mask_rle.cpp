#include "camofs/mask_rle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camofs {

namespace {

void require_canvas(int height, int width) {
    if (height < 1 || width < 1) throw std::invalid_argument("canvas dimensions must be positive");
}

void require_mask_size(const std::vector<std::uint8_t>& mask, int height, int width) {
    require_canvas(height, width);
    if (mask.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw std::invalid_argument("mask size does not match canvas dimensions");
    }
}

}  // namespace

RunLengthMask rle_encode(const std::vector<std::uint8_t>& mask, int height, int width) {
    require_mask_size(mask, height, width);
    RunLengthMask rle;
    rle.height = height;
    rle.width = width;

    std::uint8_t current = 0;  // encoding starts with the zero run, possibly empty
    int run = 0;
    for (int c = 0; c < width; ++c) {
        for (int r = 0; r < height; ++r) {
            const std::uint8_t bit = mask[static_cast<std::size_t>(r) * width + c] ? 1 : 0;
            if (bit == current) {
                ++run;
            } else {
                rle.counts.push_back(run);
                current = bit;
                run = 1;
            }
        }
    }
    rle.counts.push_back(run);
    return rle;
}

std::vector<std::uint8_t> rle_decode(const RunLengthMask& rle) {
    require_canvas(rle.height, rle.width);
    const std::size_t total = static_cast<std::size_t>(rle.height) * static_cast<std::size_t>(rle.width);
    std::int64_t sum = 0;
    for (int c : rle.counts) {
        if (c < 0) throw std::invalid_argument("run-length count is negative");
        sum += c;
    }
    if (sum != static_cast<std::int64_t>(total)) {
        throw std::invalid_argument("run-length counts sum to " + std::to_string(sum) +
                                    ", expected " + std::to_string(total));
    }

    std::vector<std::uint8_t> mask(total, 0);
    std::size_t pos = 0;  // column-major cursor
    std::uint8_t value = 0;
    for (int count : rle.counts) {
        for (int k = 0; k < count; ++k, ++pos) {
            const int c = static_cast<int>(pos / rle.height);
            const int r = static_cast<int>(pos % rle.height);
            mask[static_cast<std::size_t>(r) * rle.width + c] = value;
        }
        value ^= 1;
    }
    return mask;
}

std::string rle_to_string(const RunLengthMask& rle) {
    std::string s;
    for (std::size_t i = 0; i < rle.counts.size(); ++i) {
        std::int64_t x = rle.counts[i];
        if (i > 2) x -= rle.counts[i - 2];
        bool more = true;
        while (more) {
            char c = static_cast<char>(x & 0x1f);
            x >>= 5;
            more = (c & 0x10) ? (x != -1) : (x != 0);
            if (more) c |= 0x20;
            s.push_back(static_cast<char>(c + 48));
        }
    }
    return s;
}

RunLengthMask rle_from_string(const std::string& text, int height, int width) {
    require_canvas(height, width);
    RunLengthMask rle;
    rle.height = height;
    rle.width = width;
    std::size_t p = 0;
    while (p < text.size()) {
        std::int64_t x = 0;
        int k = 0;
        bool more = true;
        while (more) {
            if (p >= text.size()) throw std::invalid_argument("truncated run-length string");
            const int c = text[p] - 48;
            if (c < 0 || c > 0x3f) throw std::invalid_argument("bad character in run-length string");
            x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
            if (!more && (c & 0x10)) x |= -(static_cast<std::int64_t>(1) << (5 * k));
        }
        if (rle.counts.size() > 2) x += rle.counts[rle.counts.size() - 2];
        if (x < 0) throw std::invalid_argument("run-length string decodes to a negative count");
        rle.counts.push_back(static_cast<int>(x));
    }
    std::int64_t total = 0;
    for (int count : rle.counts) total += count;
    if (total != static_cast<std::int64_t>(height) * width) {
        throw std::invalid_argument("run-length counts sum to " + std::to_string(total) +
                                    ", expected " + std::to_string(static_cast<std::int64_t>(height) * width));
    }
    return rle;
}

std::int64_t rle_area(const RunLengthMask& rle) {
    std::int64_t area = 0;
    for (std::size_t i = 1; i < rle.counts.size(); i += 2) area += rle.counts[i];
    return area;
}

std::vector<std::uint8_t> rasterize_polygons(const std::vector<std::vector<double>>& polygons,
                                             int height, int width) {
    require_canvas(height, width);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0);

    for (const std::vector<double>& poly : polygons) {
        if (poly.size() < 6 || poly.size() % 2 != 0) {
            throw std::invalid_argument("polygon needs at least 3 (x, y) vertex pairs");
        }
        for (double v : poly) {
            if (!std::isfinite(v)) throw std::invalid_argument("polygon has a non-finite coordinate");
        }
        const std::size_t n = poly.size() / 2;

        for (int r = 0; r < height; ++r) {
            const double ys = r + 0.5;
            std::vector<double> crossings;
            for (std::size_t i = 0; i < n; ++i) {
                const double x1 = poly[2 * i], y1 = poly[2 * i + 1];
                const std::size_t j = (i + 1) % n;
                const double x2 = poly[2 * j], y2 = poly[2 * j + 1];
                if (std::min(y1, y2) <= ys && ys < std::max(y1, y2)) {
                    crossings.push_back(x1 + (ys - y1) * (x2 - x1) / (y2 - y1));
                }
            }
            std::sort(crossings.begin(), crossings.end());
            for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) {
                const int c_begin = std::max(0, static_cast<int>(std::ceil(crossings[i] - 0.5)));
                const int c_end = std::min(width, static_cast<int>(std::ceil(crossings[i + 1] - 0.5)));
                for (int c = c_begin; c < c_end; ++c) {
                    mask[static_cast<std::size_t>(r) * width + c] = 1;
                }
            }
        }
    }
    return mask;
}

std::int64_t mask_intersection(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("mask sizes differ");
    std::int64_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] && b[i]) ? 1 : 0;
    return n;
}

std::int64_t mask_union(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("mask sizes differ");
    std::int64_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] || b[i]) ? 1 : 0;
    return n;
}

}  // namespace camofs
