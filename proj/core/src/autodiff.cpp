#include "camofs/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace camofs::ad {

namespace {

Tape* require_same_tape(Scalar a, Scalar b) {
    if (a.tape() == nullptr || b.tape() == nullptr) {
        throw std::logic_error("autodiff: operation on a default-constructed Scalar");
    }
    if (a.tape() != b.tape()) {
        throw std::logic_error("autodiff: operands live on different tapes");
    }
    return a.tape();
}

Tape* require_tape(Scalar a) {
    if (a.tape() == nullptr) {
        throw std::logic_error("autodiff: operation on a default-constructed Scalar");
    }
    return a.tape();
}

void require_same_length(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

}  // namespace

double Scalar::value() const { return require_tape(*this)->value_at(id_); }
double Scalar::grad() const { return require_tape(*this)->grad_at(id_); }

Scalar Tape::push(double value, std::int32_t a, double da, std::int32_t b, double db) {
    Node n;
    n.value = value;
    n.a = a;
    n.b = b;
    n.da = da;
    n.db = db;
    nodes_.push_back(n);
    return Scalar(this, static_cast<std::int32_t>(nodes_.size() - 1));
}

Scalar Tape::leaf(double value) { return push(value, -1, 0.0, -1, 0.0); }

Vector Tape::leaf_vector(std::span<const double> values) {
    Vector v;
    v.reserve(values.size());
    for (double x : values) v.push_back(leaf(x));
    return v;
}

Scalar Tape::unary(double value, Scalar a, double da) {
    if (a.tape() != this) throw std::logic_error("autodiff: operand from another tape");
    return push(value, a.id(), da, -1, 0.0);
}

Scalar Tape::binary(double value, Scalar a, double da, Scalar b, double db) {
    if (a.tape() != this || b.tape() != this) {
        throw std::logic_error("autodiff: operand from another tape");
    }
    return push(value, a.id(), da, b.id(), db);
}

void Tape::backward(const Scalar& root) {
    if (root.tape() != this) throw std::logic_error("autodiff: root from another tape");
    grads_.assign(nodes_.size(), 0.0);
    grads_[static_cast<std::size_t>(root.id())] = 1.0;
    for (std::int32_t i = root.id(); i >= 0; --i) {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        const double g = grads_[static_cast<std::size_t>(i)];
        if (g == 0.0) continue;
        if (n.a >= 0) grads_[static_cast<std::size_t>(n.a)] += g * n.da;
        if (n.b >= 0) grads_[static_cast<std::size_t>(n.b)] += g * n.db;
    }
}

double Tape::grad_at(std::int32_t id) const {
    if (static_cast<std::size_t>(id) >= grads_.size()) {
        throw std::logic_error("autodiff: gradient read before backward");
    }
    return grads_[static_cast<std::size_t>(id)];
}

void backward(const Scalar& root) { require_tape(root)->backward(root); }

Scalar operator+(Scalar a, Scalar b) {
    return require_same_tape(a, b)->binary(a.value() + b.value(), a, 1.0, b, 1.0);
}

Scalar operator-(Scalar a, Scalar b) {
    return require_same_tape(a, b)->binary(a.value() - b.value(), a, 1.0, b, -1.0);
}

Scalar operator*(Scalar a, Scalar b) {
    return require_same_tape(a, b)->binary(a.value() * b.value(), a, b.value(), b, a.value());
}

Scalar operator/(Scalar a, Scalar b) {
    const double bv = b.value();
    const double q = a.value() / bv;
    return require_same_tape(a, b)->binary(q, a, 1.0 / bv, b, -q / bv);
}

Scalar operator-(Scalar a) { return require_tape(a)->unary(-a.value(), a, -1.0); }

Scalar operator+(Scalar a, double c) { return require_tape(a)->unary(a.value() + c, a, 1.0); }
Scalar operator+(double c, Scalar a) { return a + c; }
Scalar operator-(Scalar a, double c) { return require_tape(a)->unary(a.value() - c, a, 1.0); }
Scalar operator-(double c, Scalar a) { return require_tape(a)->unary(c - a.value(), a, -1.0); }
Scalar operator*(Scalar a, double c) { return require_tape(a)->unary(a.value() * c, a, c); }
Scalar operator*(double c, Scalar a) { return a * c; }
Scalar operator/(Scalar a, double c) { return require_tape(a)->unary(a.value() / c, a, 1.0 / c); }

Scalar exp(Scalar a) {
    const double v = std::exp(a.value());
    return require_tape(a)->unary(v, a, v);
}

Scalar log(Scalar a) { return require_tape(a)->unary(std::log(a.value()), a, 1.0 / a.value()); }

Scalar sqrt(Scalar a) {
    const double v = std::sqrt(a.value());
    return require_tape(a)->unary(v, a, 0.5 / v);
}

Scalar relu(Scalar a) {
    const double v = a.value();
    return require_tape(a)->unary(v > 0.0 ? v : 0.0, a, v > 0.0 ? 1.0 : 0.0);
}

Scalar sum(std::span<const Scalar> xs) {
    if (xs.empty()) throw std::invalid_argument("sum: empty input");
    Scalar acc = xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) acc = acc + xs[i];
    return acc;
}

Scalar mean(std::span<const Scalar> xs) {
    return sum(xs) * (1.0 / static_cast<double>(xs.size()));
}

Scalar dot(const Vector& a, const Vector& b) {
    require_same_length(a.size(), b.size(), "dot");
    if (a.empty()) throw std::invalid_argument("dot: empty vectors");
    Scalar acc = a[0] * b[0];
    for (std::size_t i = 1; i < a.size(); ++i) acc = acc + a[i] * b[i];
    return acc;
}

Scalar squared_norm(const Vector& v) { return dot(v, v); }

Scalar norm(const Vector& v) { return sqrt(squared_norm(v)); }

Scalar cosine_distance(const Vector& x, const Vector& y) {
    require_same_length(x.size(), y.size(), "cosine_distance");
    Scalar nx = norm(x);
    Scalar ny = norm(y);
    if (nx.value() == 0.0 || ny.value() == 0.0) {
        throw std::domain_error("cosine_distance: zero-norm input");
    }
    return 1.0 - dot(x, y) / (nx * ny);
}

Scalar log_sum_exp(std::span<const Scalar> xs) {
    if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
    double m = xs[0].value();
    for (const Scalar& x : xs) m = std::max(m, x.value());
    // Shift by the (detached) max; the softmax adjoints are exact regardless.
    Scalar acc = exp(xs[0] - m);
    for (std::size_t i = 1; i < xs.size(); ++i) acc = acc + exp(xs[i] - m);
    return log(acc) + m;
}

Vector mean_vector(std::span<const Vector> vs) {
    if (vs.empty()) throw std::invalid_argument("mean_vector: empty input");
    const std::size_t dim = vs[0].size();
    for (const Vector& v : vs) require_same_length(dim, v.size(), "mean_vector");
    const double inv = 1.0 / static_cast<double>(vs.size());
    Vector out;
    out.reserve(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        Scalar acc = vs[0][d];
        for (std::size_t i = 1; i < vs.size(); ++i) acc = acc + vs[i][d];
        out.push_back(acc * inv);
    }
    return out;
}

Vector normalized(const Vector& v) {
    Scalar n = norm(v);
    if (n.value() == 0.0) throw std::domain_error("normalized: zero-norm input");
    Vector out;
    out.reserve(v.size());
    for (const Scalar& x : v) out.push_back(x / n);
    return out;
}

std::vector<double> values(const Vector& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const Scalar& x : v) out.push_back(x.value());
    return out;
}

std::vector<double> grads(const Vector& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const Scalar& x : v) out.push_back(x.grad());
    return out;
}

}  // namespace camofs::ad
