#include "camofs/toy_trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "camofs/memory_bank.hpp"
#include "camofs/triplet_loss.hpp"

namespace camofs {

namespace {

// Box-Muller over the engine's raw 64-bit output; mt19937_64 is bit-exact by
// definition, so streams replay identically across standard libraries.
double gauss(std::mt19937_64& rng) {
    const double u1 = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<double> random_unit(std::mt19937_64& rng, int dim) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    double sq = 0.0;
    while (sq < 1e-12) {
        sq = 0.0;
        for (double& x : v) {
            x = gauss(rng);
            sq += x * x;
        }
    }
    const double n = std::sqrt(sq);
    for (double& x : v) x /= n;
    return v;
}

void require_task(const SyntheticTask& task) {
    if (task.num_classes < 1 || task.dim < 1 || task.patches_per_class < 1 ||
        task.patch_h < 1 || task.patch_w < 1) {
        throw std::invalid_argument("synthetic task dimensions must be positive");
    }
    if (task.patch_h * task.patch_w < 2) {
        throw std::invalid_argument("patches need at least 2 cells to hold both fg and bg");
    }
    if (!(task.separation >= 0.0) || !(task.noise > 0.0)) {
        throw std::invalid_argument("synthetic task needs separation >= 0 and noise > 0");
    }
}

std::vector<double> project(const std::vector<double>& w, int dim, const std::vector<double>& x) {
    std::vector<double> y(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < dim; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dim; ++j) acc += w[static_cast<std::size_t>(i) * dim + j] * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

double cosine_sim(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    if (denom == 0.0) throw std::domain_error("cosine similarity of a zero-norm vector");
    return dot / denom;
}

std::vector<double> cell_features(const RoIFeaturePatch& patch, int h, int w) {
    std::vector<double> x(static_cast<std::size_t>(patch.channels));
    for (int c = 0; c < patch.channels; ++c) x[static_cast<std::size_t>(c)] = patch.at(c, h, w);
    return x;
}

// Discrimination gap per class under projection w: mean over patches of
// (mean cos-sim(avg, fg) - mean cos-sim(avg, bg)).
std::map<int, double> gaps_under(const std::vector<LabeledPatch>& data,
                                 const std::vector<double>& w, int dim) {
    std::map<int, double> sum;
    std::map<int, int> count;
    for (const LabeledPatch& lp : data) {
        std::vector<std::vector<double>> fg, bg;
        std::vector<double> avg(static_cast<std::size_t>(dim), 0.0);
        for (int h = 0; h < lp.patch.height; ++h) {
            for (int wcol = 0; wcol < lp.patch.width; ++wcol) {
                auto y = project(w, dim, cell_features(lp.patch, h, wcol));
                if (lp.mask.at(h, wcol)) {
                    for (int i = 0; i < dim; ++i) avg[static_cast<std::size_t>(i)] += y[static_cast<std::size_t>(i)];
                    fg.push_back(std::move(y));
                } else {
                    bg.push_back(std::move(y));
                }
            }
        }
        for (double& x : avg) x /= static_cast<double>(fg.size());
        double fg_sim = 0.0, bg_sim = 0.0;
        for (const auto& v : fg) fg_sim += cosine_sim(avg, v);
        for (const auto& v : bg) bg_sim += cosine_sim(avg, v);
        fg_sim /= static_cast<double>(fg.size());
        bg_sim /= static_cast<double>(bg.size());
        sum[lp.class_id] += fg_sim - bg_sim;
        ++count[lp.class_id];
    }
    std::map<int, double> gaps;
    for (const auto& [cid, s] : sum) gaps[cid] = s / count[cid];
    return gaps;
}

double mean_of(const std::map<int, double>& m) {
    double s = 0.0;
    for (const auto& [k, v] : m) s += v;
    return m.empty() ? 0.0 : s / static_cast<double>(m.size());
}

}  // namespace

std::vector<LabeledPatch> generate(const SyntheticTask& task) {
    require_task(task);
    std::vector<LabeledPatch> out;
    out.reserve(static_cast<std::size_t>(task.num_classes) * task.patches_per_class);

    for (int cid = 0; cid < task.num_classes; ++cid) {
        std::seed_seq ss{task.seed, static_cast<std::uint64_t>(cid)};
        std::mt19937_64 rng(ss);
        const std::vector<double> mu = random_unit(rng, task.dim);
        const std::vector<double> offset = random_unit(rng, task.dim);

        for (int p = 0; p < task.patches_per_class; ++p) {
            LabeledPatch lp;
            lp.class_id = cid;
            lp.mask.height = task.patch_h;
            lp.mask.width = task.patch_w;
            const int cells = task.patch_h * task.patch_w;
            lp.mask.bits.resize(static_cast<std::size_t>(cells));
            while (true) {
                int ones = 0;
                for (auto& bit : lp.mask.bits) {
                    bit = static_cast<std::uint8_t>(rng() & 1u);
                    ones += bit;
                }
                if (ones > 0 && ones < cells) break;  // need both sides present
            }

            lp.patch.channels = task.dim;
            lp.patch.height = task.patch_h;
            lp.patch.width = task.patch_w;
            lp.patch.data.resize(static_cast<std::size_t>(task.dim) * cells);
            for (int h = 0; h < task.patch_h; ++h) {
                for (int w = 0; w < task.patch_w; ++w) {
                    const bool is_fg = lp.mask.at(h, w) != 0;
                    for (int c = 0; c < task.dim; ++c) {
                        double v = mu[static_cast<std::size_t>(c)];
                        if (!is_fg) v += task.separation * offset[static_cast<std::size_t>(c)];
                        v += task.noise * gauss(rng);
                        lp.patch.data[static_cast<std::size_t>((c * task.patch_h + h) * task.patch_w + w)] = v;
                    }
                }
            }
            out.push_back(std::move(lp));
        }
    }
    return out;
}

TrainReport train(const SyntheticTask& task, const CompositeConfig& cfg, int steps, double lr) {
    require_task(task);
    if (steps < 1) throw std::invalid_argument("train: steps must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<LabeledPatch> data = generate(task);
    const int dim = task.dim;

    std::vector<double> w(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) w[static_cast<std::size_t>(i) * dim + i] = 1.0;

    std::map<int, ClassMemoryBank> banks;
    for (int cid = 0; cid < task.num_classes; ++cid) {
        banks.emplace(cid, ClassMemoryBank(cid, cfg.memory.capacity));
    }

    // Warm start so the first step's loss sees a populated bank.
    auto refresh_banks_plain = [&]() {
        for (const LabeledPatch& lp : data) {
            std::vector<std::vector<double>> fg, bg;
            for (int h = 0; h < lp.patch.height; ++h) {
                for (int wcol = 0; wcol < lp.patch.width; ++wcol) {
                    auto y = project(w, dim, cell_features(lp.patch, h, wcol));
                    (lp.mask.at(h, wcol) ? fg : bg).push_back(std::move(y));
                }
            }
            banks.at(lp.class_id).store(fg, bg);
        }
    };
    refresh_banks_plain();

    TrainReport report;
    report.initial_gap = gaps_under(data, w, dim);
    report.initial_gap_mean = mean_of(report.initial_gap);

    for (int step = 0; step < steps; ++step) {
        ad::Tape tape;
        ad::Vector wn = tape.leaf_vector(w);

        std::vector<std::pair<int, FgBgPartition>> parts;
        parts.reserve(data.size());
        for (const LabeledPatch& lp : data) {
            std::vector<ad::Vector> locations;
            locations.reserve(static_cast<std::size_t>(lp.patch.height) * lp.patch.width);
            for (int h = 0; h < lp.patch.height; ++h) {
                for (int wcol = 0; wcol < lp.patch.width; ++wcol) {
                    const auto x = cell_features(lp.patch, h, wcol);
                    ad::Vector y;
                    y.reserve(static_cast<std::size_t>(dim));
                    for (int i = 0; i < dim; ++i) {
                        ad::Scalar acc = wn[static_cast<std::size_t>(i) * dim] * x[0];
                        for (int j = 1; j < dim; ++j) {
                            acc = acc + wn[static_cast<std::size_t>(i) * dim + j] * x[static_cast<std::size_t>(j)];
                        }
                        y.push_back(acc);
                    }
                    locations.push_back(std::move(y));
                }
            }
            parts.emplace_back(lp.class_id, group_by_mask(locations, lp.mask));
        }

        std::vector<FgBgPartition> triplet_parts;
        std::vector<std::pair<int, ad::Vector>> queries;
        for (const auto& [cid, part] : parts) {
            triplet_parts.push_back(part);
            queries.emplace_back(cid, part.avg);
        }

        ad::Scalar l_triplet = batch_triplet_loss(triplet_parts, cfg.triplet);
        ad::Scalar l_memory = batch_memory_loss(banks, queries, cfg.memory);
        BaseLossTerm base{tape.constant(0.0)};
        ad::Scalar total = final_loss(base, l_triplet, l_memory, cfg);

        const double value = total.value();
        if (!std::isfinite(value)) {
            throw std::runtime_error("train: loss became non-finite at step " + std::to_string(step));
        }
        report.loss_trace.push_back(value);

        tape.backward(total);
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] -= lr * wn[k].grad();
        }

        // Refresh banks with this step's (pre-update) projected features.
        for (const auto& [cid, part] : parts) {
            banks.at(cid).store_detached(part.fg, part.bg);
        }
    }

    report.final_gap = gaps_under(data, w, dim);
    report.final_gap_mean = mean_of(report.final_gap);
    report.initial_loss = report.loss_trace.front();
    report.final_loss = report.loss_trace.back();
    report.loss_ratio = report.initial_loss != 0.0 ? report.final_loss / report.initial_loss : -1.0;
    report.steps = steps;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string report_to_json(const TrainReport& report) {
    nlohmann::json j;
    j["loss_trace"] = report.loss_trace;
    j["initial_gap"] = nlohmann::json::object();
    j["final_gap"] = nlohmann::json::object();
    for (const auto& [cid, g] : report.initial_gap) j["initial_gap"][std::to_string(cid)] = g;
    for (const auto& [cid, g] : report.final_gap) j["final_gap"][std::to_string(cid)] = g;
    j["initial_gap_mean"] = report.initial_gap_mean;
    j["final_gap_mean"] = report.final_gap_mean;
    j["initial_loss"] = report.initial_loss;
    j["final_loss"] = report.final_loss;
    j["loss_ratio"] = report.loss_ratio;
    j["steps"] = report.steps;
    j["wall_seconds"] = report.wall_seconds;
    return j.dump(2);
}

std::string trace_to_csv(const TrainReport& report) {
    std::ostringstream out;
    out << "step,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < report.loss_trace.size(); ++i) {
        out << i << ',' << report.loss_trace[i] << '\n';
    }
    return out.str();
}

}  // namespace camofs
