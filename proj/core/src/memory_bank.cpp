#include "camofs/memory_bank.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace camofs {

namespace {

void require_config(const MemoryConfig& cfg) {
    if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) {
        throw std::invalid_argument("memory tau must be finite and positive");
    }
    if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) {
        throw std::invalid_argument("memory beta must be finite and non-negative");
    }
    if (cfg.capacity < 1) {
        throw std::invalid_argument("memory capacity must be >= 1");
    }
}

std::vector<double> l2_normalized(const std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw std::invalid_argument("feature contains a non-finite value");
        sq += x * x;
    }
    const double n = std::sqrt(sq);
    if (n == 0.0) throw std::domain_error("cannot store a zero-norm feature");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

}  // namespace

ClassMemoryBank::ClassMemoryBank(int class_id, int capacity)
    : class_id_(class_id), capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("bank capacity must be >= 1");
}

void ClassMemoryBank::push(std::deque<std::vector<double>>& store, const std::vector<double>& v,
                           bool normalize) {
    if (v.empty()) throw std::invalid_argument("cannot store an empty feature");
    if (dim_ == 0) {
        dim_ = static_cast<int>(v.size());
    } else if (static_cast<int>(v.size()) != dim_) {
        throw std::invalid_argument("feature dimension " + std::to_string(v.size()) +
                                    " does not match bank dimension " + std::to_string(dim_));
    }
    store.push_back(normalize ? l2_normalized(v) : v);
    while (store.size() > static_cast<std::size_t>(capacity_)) store.pop_front();
}

void ClassMemoryBank::store(const std::vector<std::vector<double>>& fg_new,
                            const std::vector<std::vector<double>>& bg_new) {
    for (const auto& v : fg_new) push(fg_store_, v);
    for (const auto& v : bg_new) push(bg_store_, v);
}

void ClassMemoryBank::store_detached(const std::vector<ad::Vector>& fg_new,
                                     const std::vector<ad::Vector>& bg_new) {
    std::vector<std::vector<double>> fg, bg;
    fg.reserve(fg_new.size());
    bg.reserve(bg_new.size());
    for (const ad::Vector& v : fg_new) fg.push_back(ad::values(v));
    for (const ad::Vector& v : bg_new) bg.push_back(ad::values(v));
    store(fg, bg);
}

MemorySample ClassMemoryBank::sample() const {
    if (fg_store_.empty()) throw std::logic_error("sample: foreground store is empty");
    MemorySample s;
    s.fg.assign(fg_store_.begin(), fg_store_.end());
    s.bg.assign(bg_store_.begin(), bg_store_.end());
    s.general.assign(s.fg[0].size(), 0.0);
    for (const auto& v : s.fg) {
        for (std::size_t i = 0; i < v.size(); ++i) s.general[i] += v[i];
    }
    for (double& x : s.general) x /= static_cast<double>(s.fg.size());
    return s;
}

std::string ClassMemoryBank::to_json() const {
    nlohmann::json j;
    j["class_id"] = class_id_;
    j["capacity"] = capacity_;
    j["fg"] = nlohmann::json::array();
    j["bg"] = nlohmann::json::array();
    for (const auto& v : fg_store_) j["fg"].push_back(v);
    for (const auto& v : bg_store_) j["bg"].push_back(v);
    return j.dump(2);
}

ClassMemoryBank ClassMemoryBank::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ClassMemoryBank bank(j.at("class_id").get<int>(), j.at("capacity").get<int>());
    // Snapshots hold already-normalized features; restore them verbatim so the
    // round-trip is the identity.
    for (const auto& v : j.at("fg")) bank.push(bank.fg_store_, v.get<std::vector<double>>(), false);
    for (const auto& v : j.at("bg")) bank.push(bank.bg_store_, v.get<std::vector<double>>(), false);
    return bank;
}

ad::Scalar memory_loss(const ad::Vector& general, const std::vector<ad::Vector>& bg,
                       const ad::Vector& fg_query, const MemoryConfig& cfg) {
    require_config(cfg);
    ad::Vector g = ad::normalized(general);
    ad::Vector f = ad::normalized(fg_query);
    ad::Scalar z_f = ad::dot(g, f) / cfg.tau;
    if (bg.empty()) {
        return z_f - z_f;  // -log(e^s / e^s), exactly 0 with no gradient
    }
    std::vector<ad::Scalar> logits;
    logits.reserve(bg.size() + 1);
    for (const ad::Vector& b : bg) {
        logits.push_back(ad::dot(g, ad::normalized(b)) / cfg.tau);
    }
    logits.push_back(z_f);
    return ad::log_sum_exp(logits) - z_f;
}

ad::Scalar memory_loss(const MemorySample& sample, const ad::Vector& fg_query,
                       const MemoryConfig& cfg) {
    if (fg_query.empty()) throw std::invalid_argument("memory_loss: empty query");
    ad::Tape* tape = fg_query[0].tape();
    ad::Vector general = tape->leaf_vector(sample.general);
    std::vector<ad::Vector> bg;
    bg.reserve(sample.bg.size());
    for (const auto& b : sample.bg) bg.push_back(tape->leaf_vector(b));
    return memory_loss(general, bg, fg_query, cfg);
}

ad::Scalar batch_memory_loss(const std::map<int, ClassMemoryBank>& banks,
                             const std::vector<std::pair<int, ad::Vector>>& queries,
                             const MemoryConfig& cfg) {
    require_config(cfg);
    if (queries.empty()) throw std::invalid_argument("batch_memory_loss: no queries");
    std::vector<ad::Scalar> losses;
    losses.reserve(queries.size());
    for (const auto& [class_id, query] : queries) {
        auto it = banks.find(class_id);
        if (it == banks.end()) {
            throw std::invalid_argument("batch_memory_loss: no bank for class " +
                                        std::to_string(class_id));
        }
        losses.push_back(memory_loss(it->second.sample(), query, cfg));
    }
    return ad::mean(losses);
}

}  // namespace camofs
