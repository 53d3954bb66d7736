#pragma once

#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "camofs/autodiff.hpp"

namespace camofs {

struct MemoryConfig {
    double tau = 1.0;    // softmax temperature, must be positive
    double beta = 1e-2;  // composite-objective weight carried alongside
    int capacity = 512;
};

// Detached snapshot drawn from a bank: the stored foreground and background
// features plus their class-level mean. general is the plain mean of fg and
// is not re-normalized.
struct MemorySample {
    std::vector<std::vector<double>> fg;
    std::vector<std::vector<double>> bg;
    std::vector<double> general;
};

// Per-class FIFO store of foreground and background features. Entries are
// L2-normalized on insertion and hold no gradient state; when an insertion
// would exceed capacity the oldest entries are evicted first.
class ClassMemoryBank {
public:
    explicit ClassMemoryBank(int class_id, int capacity = 512);

    int class_id() const { return class_id_; }
    int capacity() const { return capacity_; }
    std::size_t fg_size() const { return fg_store_.size(); }
    std::size_t bg_size() const { return bg_store_.size(); }
    const std::deque<std::vector<double>>& fg_store() const { return fg_store_; }
    const std::deque<std::vector<double>>& bg_store() const { return bg_store_; }

    // Normalizes and appends; rejects zero-norm vectors and dimension
    // mismatches against earlier contents.
    void store(const std::vector<std::vector<double>>& fg_new,
               const std::vector<std::vector<double>>& bg_new);
    // Same, taking live tape vectors; only their current values are kept.
    void store_detached(const std::vector<ad::Vector>& fg_new,
                        const std::vector<ad::Vector>& bg_new);

    // Requires a non-empty foreground store.
    MemorySample sample() const;

    std::string to_json() const;
    static ClassMemoryBank from_json(const std::string& text);

private:
    void push(std::deque<std::vector<double>>& store, const std::vector<double>& v,
              bool normalize = true);

    int class_id_ = 0;
    int capacity_ = 512;
    int dim_ = 0;  // fixed by the first stored vector
    std::deque<std::vector<double>> fg_store_;
    std::deque<std::vector<double>> bg_store_;
};

// Contrastive pull of a query foreground feature toward its class mean
// against the stored backgrounds:
//   -log[ exp(g.f/tau) / (sum_j exp(g.b_j/tau) + exp(g.f/tau)) ]
// with g, f, and every b_j L2-normalized before the dot products. An empty
// background set yields exactly 0.
ad::Scalar memory_loss(const ad::Vector& general, const std::vector<ad::Vector>& bg,
                       const ad::Vector& fg_query, const MemoryConfig& cfg);

// Convenience form lifting a detached sample onto the query's tape as
// constants; gradients flow only into fg_query.
ad::Scalar memory_loss(const MemorySample& sample, const ad::Vector& fg_query,
                       const MemoryConfig& cfg);

// Mean of memory_loss over (class_id, query) pairs against the matching
// banks. Every queried class must have a bank with stored foregrounds.
ad::Scalar batch_memory_loss(const std::map<int, ClassMemoryBank>& banks,
                             const std::vector<std::pair<int, ad::Vector>>& queries,
                             const MemoryConfig& cfg);

}  // namespace camofs
