#include <doctest.h>

#include <camofs/roi_features.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "test_util.hpp"

using namespace camofs;
using testutil::Uniform;

namespace {

RoIFeaturePatch make_patch(int c, int h, int w, const std::vector<double>& data) {
    return RoIFeaturePatch{c, h, w, data};
}

InstanceMask make_mask(int h, int w, const std::vector<std::uint8_t>& bits) {
    return InstanceMask{h, w, bits};
}

}  // namespace

TEST_SUITE("roi_features") {

TEST_CASE("single foreground cell: avg equals that cell") {
    // C=2, 2x2. Channel-major data; location (h, w) vector = {data[0][h][w], data[1][h][w]}.
    auto patch = make_patch(2, 2, 2,
                            {1, 2,   //
                             3, 4,   // channel 0
                             5, 6,   //
                             7, 8});  // channel 1
    auto mask = make_mask(2, 2, {1, 0, 0, 0});

    ad::Tape tape;
    auto part = partition(tape, patch, mask);
    REQUIRE(part.fg.size() == 1);
    REQUIRE(part.bg.size() == 3);
    CHECK(part.avg[0].value() == 1.0);
    CHECK(part.avg[1].value() == 5.0);
    CHECK(part.fg[0][0].value() == 1.0);
    CHECK(part.fg[0][1].value() == 5.0);
}

TEST_CASE("all-ones mask: no background, avg over all cells") {
    auto patch = make_patch(1, 2, 2, {1, 2, 3, 4});
    auto mask = make_mask(2, 2, {1, 1, 1, 1});

    ad::Tape tape;
    auto part = partition(tape, patch, mask);
    CHECK(part.fg.size() == 4);
    CHECK(part.bg.empty());
    CHECK(part.avg[0].value() == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("all-zero mask raises EmptyForegroundError") {
    auto patch = make_patch(1, 2, 2, {1, 2, 3, 4});
    auto mask = make_mask(2, 2, {0, 0, 0, 0});
    ad::Tape tape;
    CHECK_THROWS_AS(partition(tape, patch, mask), EmptyForegroundError);
}

TEST_CASE("dimension mismatch between mask and patch is an error") {
    auto patch = make_patch(1, 2, 2, {1, 2, 3, 4});
    auto mask = make_mask(2, 3, {1, 0, 0, 0, 0, 0});
    ad::Tape tape;
    CHECK_THROWS(partition(tape, patch, mask));
}

TEST_CASE("random 4x4 partitions: avg matches accumulate-and-divide oracle") {
    Uniform u(21);
    for (int trial = 0; trial < 50; ++trial) {
        auto fx = testutil::random_patch(u, 3, 4, 4);
        ad::Tape tape;
        auto part = partition(tape, fx.patch, fx.mask);

        std::vector<double> acc(3, 0.0);
        long n = 0;
        for (int h = 0; h < 4; ++h)
            for (int w = 0; w < 4; ++w)
                if (fx.mask.at(h, w)) {
                    for (int c = 0; c < 3; ++c) acc[static_cast<std::size_t>(c)] += fx.patch.at(c, h, w);
                    ++n;
                }
        REQUIRE(n > 0);
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(part.avg[static_cast<std::size_t>(c)].value() - acc[static_cast<std::size_t>(c)] / n) <= 1e-12);
    }
}

TEST_CASE("partition is exhaustive and exclusive") {
    Uniform u(22);
    for (int trial = 0; trial < 100; ++trial) {
        auto fx = testutil::random_patch(u, 2, 3, 5);
        ad::Tape tape;
        auto part = partition(tape, fx.patch, fx.mask);
        std::size_t ones = 0;
        for (auto b : fx.mask.bits) ones += b;
        CHECK(part.fg.size() == ones);
        CHECK(part.fg.size() + part.bg.size() == 15);
    }
}

TEST_CASE("avg is invariant under fg permutation") {
    Uniform u(23);
    auto fx = testutil::random_patch(u, 4, 4, 4);
    ad::Tape tape;
    auto part = partition(tape, fx.patch, fx.mask);

    // Same multiset of fg vectors, reversed order.
    auto reversed = part.fg;
    std::reverse(reversed.begin(), reversed.end());
    auto again = ad::mean_vector(reversed);
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(part.avg[c].value() == doctest::Approx(again[c].value()).epsilon(1e-15));
}

TEST_CASE("constant patch: avg equals the constant regardless of mask") {
    std::vector<double> data(2 * 3 * 3);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 9; ++i) data[static_cast<std::size_t>(c * 9 + i)] = c == 0 ? 0.25 : -3.0;
    auto patch = make_patch(2, 3, 3, data);

    Uniform u(24);
    for (int trial = 0; trial < 20; ++trial) {
        InstanceMask mask{3, 3, {}};
        mask.bits.resize(9);
        do {
            for (auto& b : mask.bits) b = static_cast<std::uint8_t>(u.raw() & 1);
        } while (std::count(mask.bits.begin(), mask.bits.end(), std::uint8_t{1}) == 0);

        ad::Tape tape;
        auto part = partition(tape, patch, mask);
        CHECK(part.avg[0].value() == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(part.avg[1].value() == doctest::Approx(-3.0).epsilon(1e-15));
    }
}

TEST_CASE("downsample to identical dims copies the mask") {
    auto mask = make_mask(3, 4, {1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0});
    auto out = downsample_mask(mask, 3, 4);
    CHECK(out.bits == mask.bits);
}

TEST_CASE("4x4 all-ones downsamples to 2x2 all-ones") {
    auto mask = make_mask(4, 4, std::vector<std::uint8_t>(16, 1));
    auto out = downsample_mask(mask, 2, 2);
    CHECK(out.height == 2);
    CHECK(out.width == 2);
    CHECK(out.bits == std::vector<std::uint8_t>(4, 1));
}

TEST_CASE("4x4 checkerboard downsamples by sampling rows and cols {0, 2}") {
    std::vector<std::uint8_t> bits(16);
    for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 4; ++w) bits[static_cast<std::size_t>(h * 4 + w)] = static_cast<std::uint8_t>((h + w) % 2);
    auto mask = make_mask(4, 4, bits);
    auto out = downsample_mask(mask, 2, 2);
    // Index formula: source (floor(i*4/2), floor(j*4/2)) = (2i, 2j).
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(out.at(i, j) == mask.at(2 * i, 2 * j));
}

TEST_CASE("downsample index formula holds for arbitrary shapes") {
    Uniform u(25);
    for (int trial = 0; trial < 50; ++trial) {
        int h = 1 + static_cast<int>(u.below(7));
        int w = 1 + static_cast<int>(u.below(7));
        InstanceMask mask{h, w, {}};
        mask.bits.resize(static_cast<std::size_t>(h) * w);
        for (auto& b : mask.bits) b = static_cast<std::uint8_t>(u.raw() & 1);
        int th = 1 + static_cast<int>(u.below(7));
        int tw = 1 + static_cast<int>(u.below(7));
        auto out = downsample_mask(mask, th, tw);
        REQUIRE(out.height == th);
        REQUIRE(out.width == tw);
        for (int i = 0; i < th; ++i)
            for (int j = 0; j < tw; ++j)
                CHECK(out.at(i, j) == mask.at(i * h / th, j * w / tw));
    }
}

}  // TEST_SUITE
