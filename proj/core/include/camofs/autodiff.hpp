#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace camofs::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Scalar {
public:
    Scalar() = default;

    double value() const;
    /// Adjoint d(root)/d(this). Valid after Tape::backward has run.
    double grad() const;

    Tape* tape() const { return tape_; }
    std::int32_t id() const { return id_; }

private:
    friend class Tape;
    Scalar(Tape* t, std::int32_t id) : tape_(t), id_(id) {}

    Tape* tape_ = nullptr;
    std::int32_t id_ = -1;
};

/// Dense vector of tape scalars. All elements must live on the same tape.
using Vector = std::vector<Scalar>;

/// Append-only record of a computation. Parents always precede children, so
/// the node order is a topological order and cycles cannot be constructed.
/// Single writer per tape; distinct tapes are fully independent.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// New input node. Gradients accumulate here on backward.
    Scalar leaf(double value);
    /// Alias of leaf; names a value that is semantically not a variable.
    Scalar constant(double value) { return leaf(value); }
    Vector leaf_vector(std::span<const double> values);

    /// Low-level node constructors, the extension point for custom ops.
    /// `da`/`db` are the local partials of the new value w.r.t. a and b.
    Scalar unary(double value, Scalar a, double da);
    Scalar binary(double value, Scalar a, double da, Scalar b, double db);

    /// Reverse sweep seeding d(root)/d(root) = 1. Adjoints are then readable
    /// through Scalar::grad. May be called repeatedly (re-seeds each time).
    void backward(const Scalar& root);

    std::size_t size() const { return nodes_.size(); }
    double value_at(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    double grad_at(std::int32_t id) const;

private:
    struct Node {
        double value = 0.0;
        std::int32_t a = -1;
        std::int32_t b = -1;
        double da = 0.0;
        double db = 0.0;
    };

    Scalar push(double value, std::int32_t a, double da, std::int32_t b, double db);

    std::vector<Node> nodes_;
    std::vector<double> grads_;
};

/// Convenience: root.tape()->backward(root).
void backward(const Scalar& root);

// Scalar arithmetic. Binary ops require both operands on the same tape.
Scalar operator+(Scalar a, Scalar b);
Scalar operator-(Scalar a, Scalar b);
Scalar operator*(Scalar a, Scalar b);
Scalar operator/(Scalar a, Scalar b);
Scalar operator-(Scalar a);
Scalar operator+(Scalar a, double c);
Scalar operator+(double c, Scalar a);
Scalar operator-(Scalar a, double c);
Scalar operator-(double c, Scalar a);
Scalar operator*(Scalar a, double c);
Scalar operator*(double c, Scalar a);
Scalar operator/(Scalar a, double c);

Scalar exp(Scalar a);
Scalar log(Scalar a);
Scalar sqrt(Scalar a);
/// max(a, 0). Subgradient at exactly zero is 0.
Scalar relu(Scalar a);

/// Left-to-right sum; errors on an empty span.
Scalar sum(std::span<const Scalar> xs);
/// Arithmetic mean; errors on an empty span.
Scalar mean(std::span<const Scalar> xs);

// Vector ops.
Scalar dot(const Vector& a, const Vector& b);
Scalar squared_norm(const Vector& v);
Scalar norm(const Vector& v);
/// d(x, y) = 1 - x.y / (|x| |y|), range [0, 2]. Errors on a zero-norm input.
Scalar cosine_distance(const Vector& x, const Vector& y);
/// log(sum_i exp(x_i)) with max-shift stabilization. Errors on empty input.
Scalar log_sum_exp(std::span<const Scalar> xs);
/// Elementwise mean of equally sized vectors. Errors on empty input.
Vector mean_vector(std::span<const Vector> vs);
/// v / |v|. Errors on a zero-norm input.
Vector normalized(const Vector& v);

std::vector<double> values(const Vector& v);
std::vector<double> grads(const Vector& v);

}  // namespace camofs::ad
