#include <doctest.h>

#include <camofs/memory_bank.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <vector>

#include "test_util.hpp"

using namespace camofs;
using testutil::Uniform;

namespace {

std::vector<double> normalize_plain(std::vector<double> v) {
    double n = 0;
    for (double e : v) n += e * e;
    n = std::sqrt(n);
    for (auto& e : v) e /= n;
    return v;
}

double dot_plain(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
    return d;
}

// Direct scalar evaluation of the contrastive pull, mirroring the published
// form with the artifact's normalization convention.
double memory_oracle(const std::vector<double>& general, const std::vector<std::vector<double>>& bg,
                     const std::vector<double>& query, double tau) {
    auto g = normalize_plain(general);
    auto f = normalize_plain(query);
    double zf = dot_plain(g, f) / tau;
    std::vector<double> logits;
    for (const auto& b : bg) logits.push_back(dot_plain(g, normalize_plain(b)) / tau);
    logits.push_back(zf);
    double m = *std::max_element(logits.begin(), logits.end());
    double s = 0;
    for (double z : logits) s += std::exp(z - m);
    return std::log(s) + m - zf;
}

std::vector<std::vector<double>> random_set(Uniform& u, std::size_t count, std::size_t dim) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(testutil::random_vector(u, dim));
    return out;
}

}  // namespace

TEST_SUITE("memory_bank") {

TEST_CASE("FIFO eviction keeps the newest entries in arrival order") {
    ClassMemoryBank bank(7, 3);
    std::vector<std::vector<double>> a{{1, 0}}, b{{0, 1}}, c{{-1, 0}}, d{{0, -1}};
    bank.store(a, {});
    bank.store(b, {});
    bank.store(c, {});
    bank.store(d, {});
    REQUIRE(bank.fg_size() == 3);
    CHECK(bank.fg_store()[0] == std::vector<double>{0, 1});
    CHECK(bank.fg_store()[1] == std::vector<double>{-1, 0});
    CHECK(bank.fg_store()[2] == std::vector<double>{0, -1});
}

TEST_CASE("five pushed at once leave the last three in arrival order") {
    ClassMemoryBank bank(1, 3);
    bank.store({{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 0}}, {});
    REQUIRE(bank.fg_size() == 3);
    CHECK(bank.fg_store()[0] == std::vector<double>{-1, 0});
    CHECK(bank.fg_store()[1] == std::vector<double>{0, -1});
    CHECK(bank.fg_store()[2] == std::vector<double>{1, 0});
}

TEST_CASE("randomized push sequences equal the replay-log suffix at several capacities") {
    for (int capacity : {1, 3, 16, 512}) {
        Uniform u(100 + static_cast<unsigned>(capacity));
        for (int seq = 0; seq < 250; ++seq) {
            ClassMemoryBank bank(0, capacity);
            std::vector<std::vector<double>> fg_log, bg_log;
            int ops = 1 + static_cast<int>(u.below(8));
            for (int op = 0; op < ops; ++op) {
                auto fg = random_set(u, u.below(5), 3);
                auto bg = random_set(u, u.below(5), 3);
                bank.store(fg, bg);
                for (const auto& v : fg) fg_log.push_back(normalize_plain(v));
                for (const auto& v : bg) bg_log.push_back(normalize_plain(v));
            }
            auto check_store = [&](const std::deque<std::vector<double>>& store,
                                   const std::vector<std::vector<double>>& log) {
                std::size_t expect = std::min(log.size(), static_cast<std::size_t>(capacity));
                REQUIRE(store.size() == expect);
                for (std::size_t i = 0; i < expect; ++i)
                    CHECK(store[i] == log[log.size() - expect + i]);
            };
            check_store(bank.fg_store(), fg_log);
            check_store(bank.bg_store(), bg_log);
        }
    }
}

TEST_CASE("entries are L2-normalized on insertion") {
    ClassMemoryBank bank(0, 4);
    bank.store({{3, 4}}, {});
    REQUIRE(bank.fg_size() == 1);
    CHECK(bank.fg_store()[0][0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(bank.fg_store()[0][1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("zero-norm and dimension-mismatched entries are rejected") {
    ClassMemoryBank bank(0, 4);
    CHECK_THROWS_AS(bank.store({{0, 0}}, {}), std::domain_error);
    bank.store({{1, 0}}, {});
    CHECK_THROWS(bank.store({{1, 0, 0}}, {}));
    CHECK_THROWS(bank.store({}, {{0.5}}));
}

TEST_CASE("sample of a singleton bank returns that vector as the class mean") {
    ClassMemoryBank bank(0, 4);
    bank.store({{1, 0}}, {});
    auto s = bank.sample();
    CHECK(s.general == std::vector<double>{1, 0});
    REQUIRE(s.fg.size() == 1);
    CHECK(s.bg.empty());
}

TEST_CASE("sample averages the stored foregrounds") {
    ClassMemoryBank bank(0, 4);
    bank.store({{1, 0}, {0, 1}}, {});
    auto s = bank.sample();
    CHECK(s.general[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.general[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("sample general matches the accumulation oracle on random banks") {
    Uniform u(41);
    for (int trial = 0; trial < 50; ++trial) {
        ClassMemoryBank bank(0, 64);
        auto fg = random_set(u, 1 + u.below(20), 5);
        bank.store(fg, random_set(u, u.below(10), 5));
        auto s = bank.sample();
        std::vector<double> acc(5, 0.0);
        for (const auto& v : fg) {
            auto n = normalize_plain(v);
            for (std::size_t i = 0; i < 5; ++i) acc[i] += n[i];
        }
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(std::abs(s.general[i] - acc[i] / static_cast<double>(fg.size())) <= 1e-12);
    }
}

TEST_CASE("sampling an empty foreground store is an error") {
    ClassMemoryBank bank(0, 4);
    CHECK_THROWS(bank.sample());
}

TEST_CASE("empty background yields exactly zero loss and zero query gradient") {
    MemorySample s;
    s.fg = {{1, 0}};
    s.general = {1, 0};

    ad::Tape tape;
    auto f = tape.leaf_vector(std::vector<double>{0.8, 0.6});
    MemoryConfig cfg;
    auto loss = memory_loss(s, f, cfg);
    CHECK(loss.value() == 0.0);
    tape.backward(loss);
    CHECK(f[0].grad() == 0.0);
    CHECK(f[1].grad() == 0.0);
}

TEST_CASE("one background at equal similarity gives ln 2") {
    MemorySample s;
    s.fg = {{1, 0}};
    s.general = {1, 0};
    s.bg = {{1, 0}};

    ad::Tape tape;
    auto f = tape.leaf_vector(std::vector<double>{1.0, 0.0});
    MemoryConfig cfg;
    CHECK(memory_loss(s, f, cfg).value() == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("aligned query against one orthogonal background gives ln(1 + 1/e)") {
    MemorySample s;
    s.fg = {{1, 0}};
    s.general = {1, 0};
    s.bg = {{0, 1}};

    ad::Tape tape;
    auto f = tape.leaf_vector(std::vector<double>{1.0, 0.0});
    MemoryConfig cfg;  // tau = 1
    CHECK(memory_loss(s, f, cfg).value() == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("loss matches the direct scalar evaluation on random samples") {
    Uniform u(42);
    for (int trial = 0; trial < 100; ++trial) {
        auto general = testutil::random_vector(u, 6);
        auto bg = random_set(u, u.below(6), 6);
        auto query = testutil::random_vector(u, 6);
        MemoryConfig cfg;
        cfg.tau = u(0.25, 4.0);

        MemorySample s;
        s.fg = {general};
        s.general = general;
        s.bg = bg;

        ad::Tape tape;
        auto f = tape.leaf_vector(query);
        double got = memory_loss(s, f, cfg).value();
        CHECK(std::abs(got - memory_oracle(general, bg, query, cfg.tau)) <= 1e-12);
    }
}

TEST_CASE("loss is non-negative and obeys the log-sum bound over 1000 samples") {
    Uniform u(43);
    for (int trial = 0; trial < 1000; ++trial) {
        auto general = testutil::random_vector(u, 4);
        auto bg = random_set(u, 1 + u.below(8), 4);
        auto query = testutil::random_vector(u, 4);
        MemoryConfig cfg;
        cfg.tau = u(0.25, 4.0);

        MemorySample s;
        s.fg = {general};
        s.general = general;
        s.bg = bg;

        ad::Tape tape;
        auto f = tape.leaf_vector(query);
        double loss = memory_loss(s, f, cfg).value();

        auto g = normalize_plain(general);
        double zf = dot_plain(g, normalize_plain(query));
        double zb = -2.0;
        for (const auto& b : bg) zb = std::max(zb, dot_plain(g, normalize_plain(b)));
        double delta = zb - zf;
        double bound = std::log(1.0 + static_cast<double>(bg.size()) * std::exp(delta / cfg.tau));

        CHECK(loss >= 0.0);
        CHECK(loss <= bound + 1e-12);
    }
}

TEST_CASE("loss decreases in the query similarity and increases in background similarity") {
    MemoryConfig cfg;
    auto loss_at = [&](double f_angle, double b_angle) {
        MemorySample s;
        s.fg = {{1, 0}};
        s.general = {1, 0};
        s.bg = {{std::cos(b_angle), std::sin(b_angle)}};
        ad::Tape tape;
        auto f = tape.leaf_vector(std::vector<double>{std::cos(f_angle), std::sin(f_angle)});
        return memory_loss(s, f, cfg).value();
    };
    // Query rotating toward the class mean (higher g.f) lowers the loss.
    CHECK(loss_at(0.2, 1.0) < loss_at(0.8, 1.0));
    // Background rotating toward the class mean (higher g.b) raises it.
    CHECK(loss_at(0.5, 0.3) > loss_at(0.5, 1.2));
}

TEST_CASE("stored features carry no gradient back to their source tape") {
    ad::Tape tape;
    auto live_fg = tape.leaf_vector(std::vector<double>{0.6, 0.8});
    auto live_bg = tape.leaf_vector(std::vector<double>{1.0, 0.0});

    ClassMemoryBank bank(0, 8);
    bank.store_detached({live_fg}, {live_bg});

    auto query = tape.leaf_vector(std::vector<double>{0.0, 1.0});
    MemoryConfig cfg;
    auto loss = memory_loss(bank.sample(), query, cfg);
    tape.backward(loss);

    CHECK(live_fg[0].grad() == 0.0);
    CHECK(live_fg[1].grad() == 0.0);
    CHECK(live_bg[0].grad() == 0.0);
    CHECK(live_bg[1].grad() == 0.0);
    CHECK((query[0].grad() != 0.0 || query[1].grad() != 0.0));
}

TEST_CASE("query gradients match central differences") {
    Uniform u(44);
    for (int trial = 0; trial < 30; ++trial) {
        auto general = testutil::random_vector(u, 5);
        auto bg = random_set(u, 1 + u.below(5), 5);
        auto query = testutil::random_vector(u, 5);
        MemoryConfig cfg;
        cfg.tau = u(0.5, 2.0);

        MemorySample s;
        s.fg = {general};
        s.general = general;
        s.bg = bg;

        ad::Tape tape;
        auto f = tape.leaf_vector(query);
        auto loss = memory_loss(s, f, cfg);
        tape.backward(loss);

        auto eval = [&](const std::vector<double>& p) {
            ad::Tape t;
            auto pf = t.leaf_vector(p);
            return memory_loss(s, pf, cfg).value();
        };
        for (std::size_t i = 0; i < query.size(); ++i) {
            double fd = testutil::central_difference(eval, query, i);
            if (std::abs(fd) <= 1e-6) continue;
            CHECK(testutil::rel_err(f[i].grad(), fd) <= 1e-4);
        }
    }
}

TEST_CASE("tape-level form is differentiable in the class mean as well") {
    Uniform u(45);
    auto general = testutil::random_vector(u, 4);
    auto bgs = random_set(u, 3, 4);
    auto query = testutil::random_vector(u, 4);
    MemoryConfig cfg;

    ad::Tape tape;
    auto g = tape.leaf_vector(general);
    std::vector<ad::Vector> bg;
    for (const auto& b : bgs) bg.push_back(tape.leaf_vector(b));
    auto f = tape.leaf_vector(query);
    auto loss = memory_loss(g, bg, f, cfg);
    tape.backward(loss);

    std::vector<double> flat = general;
    flat.insert(flat.end(), query.begin(), query.end());
    auto eval = [&](const std::vector<double>& p) {
        ad::Tape t;
        auto pg = t.leaf_vector(std::span(p.data(), 4));
        std::vector<ad::Vector> pb;
        for (const auto& b : bgs) pb.push_back(t.leaf_vector(b));
        auto pf = t.leaf_vector(std::span(p.data() + 4, 4));
        return memory_loss(pg, pb, pf, cfg).value();
    };
    for (std::size_t i = 0; i < flat.size(); ++i) {
        double fd = testutil::central_difference(eval, flat, i);
        if (std::abs(fd) <= 1e-6) continue;
        double an = i < 4 ? g[i].grad() : f[i - 4].grad();
        CHECK(testutil::rel_err(an, fd) <= 1e-4);
    }
}

TEST_CASE("bank JSON snapshot round-trips") {
    Uniform u(46);
    ClassMemoryBank bank(13, 16);
    bank.store(random_set(u, 5, 3), random_set(u, 4, 3));

    auto text = bank.to_json();
    auto back = ClassMemoryBank::from_json(text);
    CHECK(back.class_id() == 13);
    CHECK(back.capacity() == 16);
    REQUIRE(back.fg_size() == bank.fg_size());
    REQUIRE(back.bg_size() == bank.bg_size());
    for (std::size_t i = 0; i < bank.fg_size(); ++i) CHECK(back.fg_store()[i] == bank.fg_store()[i]);
    for (std::size_t i = 0; i < bank.bg_size(); ++i) CHECK(back.bg_store()[i] == bank.bg_store()[i]);
}

TEST_CASE("batch of one query equals the single loss") {
    Uniform u(47);
    std::map<int, ClassMemoryBank> banks;
    banks.emplace(3, ClassMemoryBank(3, 8));
    auto fg = random_set(u, 4, 4);
    auto bg = random_set(u, 3, 4);
    banks.at(3).store(fg, bg);

    ad::Tape tape;
    auto q = tape.leaf_vector(testutil::random_vector(u, 4));
    MemoryConfig cfg;
    std::vector<std::pair<int, ad::Vector>> queries{{3, q}};
    CHECK(batch_memory_loss(banks, queries, cfg).value() ==
          doctest::Approx(memory_loss(banks.at(3).sample(), q, cfg).value()).epsilon(1e-15));
}

TEST_CASE("batch averages a zero loss and a ln 2 loss to half ln 2") {
    std::map<int, ClassMemoryBank> banks;
    banks.emplace(1, ClassMemoryBank(1, 8));
    banks.at(1).store({{1, 0}}, {});  // no background: loss 0
    banks.emplace(2, ClassMemoryBank(2, 8));
    banks.at(2).store({{1, 0}}, {{1, 0}});  // equal similarity: ln 2

    ad::Tape tape;
    MemoryConfig cfg;
    std::vector<std::pair<int, ad::Vector>> queries{
        {1, tape.leaf_vector(std::vector<double>{1.0, 0.0})},
        {2, tape.leaf_vector(std::vector<double>{1.0, 0.0})},
    };
    CHECK(batch_memory_loss(banks, queries, cfg).value() ==
          doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("batch rejects queries without a usable bank") {
    std::map<int, ClassMemoryBank> banks;
    banks.emplace(1, ClassMemoryBank(1, 8));

    ad::Tape tape;
    MemoryConfig cfg;
    std::vector<std::pair<int, ad::Vector>> unknown{{9, tape.leaf_vector(std::vector<double>{1.0, 0.0})}};
    CHECK_THROWS(batch_memory_loss(banks, unknown, cfg));

    std::vector<std::pair<int, ad::Vector>> empty_bank{{1, tape.leaf_vector(std::vector<double>{1.0, 0.0})}};
    CHECK_THROWS(batch_memory_loss(banks, empty_bank, cfg));
}

TEST_CASE("random batches match the per-query recomputation oracle") {
    Uniform u(48);
    for (int trial = 0; trial < 20; ++trial) {
        std::map<int, ClassMemoryBank> banks;
        std::map<int, std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>> raw;
        int classes = 2 + static_cast<int>(u.below(3));
        for (int c = 0; c < classes; ++c) {
            banks.emplace(c, ClassMemoryBank(c, 32));
            auto fg = random_set(u, 1 + u.below(6), 4);
            auto bg = random_set(u, u.below(6), 4);
            banks.at(c).store(fg, bg);
            raw[c] = {fg, bg};
        }

        ad::Tape tape;
        MemoryConfig cfg;
        cfg.tau = u(0.5, 2.0);
        std::vector<std::pair<int, ad::Vector>> queries;
        std::vector<std::pair<int, std::vector<double>>> plain_queries;
        int nq = 1 + static_cast<int>(u.below(6));
        for (int q = 0; q < nq; ++q) {
            int c = static_cast<int>(u.below(static_cast<std::uint64_t>(classes)));
            auto qv = testutil::random_vector(u, 4);
            queries.emplace_back(c, tape.leaf_vector(qv));
            plain_queries.emplace_back(c, qv);
        }

        double oracle = 0;
        for (const auto& [c, qv] : plain_queries) {
            std::vector<double> acc(4, 0.0);
            const auto& fg = raw[c].first;
            for (const auto& v : fg) {
                auto n = normalize_plain(v);
                for (std::size_t i = 0; i < 4; ++i) acc[i] += n[i] / static_cast<double>(fg.size());
            }
            std::vector<std::vector<double>> nbg;
            for (const auto& v : raw[c].second) nbg.push_back(normalize_plain(v));
            oracle += memory_oracle(acc, nbg, qv, cfg.tau);
        }
        oracle /= static_cast<double>(nq);

        CHECK(std::abs(batch_memory_loss(banks, queries, cfg).value() - oracle) <= 1e-12);
    }
}

}  // TEST_SUITE
