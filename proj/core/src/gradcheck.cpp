#include "camofs/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "camofs/autodiff.hpp"

namespace camofs::ad {

namespace {

enum class OpCode { Add, Sub, MulDamped, DivGuarded, ExpDamped, LogSquare, Squash };

struct Instruction {
    OpCode op;
    int a = 0;
    int b = 0;
};

// A randomly generated program over two leaf vectors and a few leaf scalars.
// The initial registers route every vector op through the graph at least
// once; instructions then mix registers with smooth, blowup-resistant ops.
struct Program {
    int dim = 0;
    int num_extra = 0;  // scalar leaves appended after the two vectors
    std::vector<Instruction> instructions;

    int num_leaves() const { return 2 * dim + num_extra; }

    // Pure function of the leaf values; used both for the taped evaluation
    // and, re-run on perturbed leaves, for the difference quotients.
    Scalar evaluate(Tape& tape, std::span<const double> leaves, Vector* out_leaf_nodes) const {
        Vector all = tape.leaf_vector(leaves);
        Vector x(all.begin(), all.begin() + dim);
        Vector y(all.begin() + dim, all.begin() + 2 * dim);
        std::vector<Scalar> extras(all.begin() + 2 * dim, all.end());

        std::vector<Scalar> regs;
        regs.push_back(dot(x, y));
        Scalar cdist = cosine_distance(x, y);
        regs.push_back(cdist);
        regs.push_back(log_sum_exp(extras));
        for (Scalar s : extras) regs.push_back(s);

        for (const Instruction& ins : instructions) {
            Scalar a = regs[static_cast<std::size_t>(ins.a) % regs.size()];
            Scalar b = regs[static_cast<std::size_t>(ins.b) % regs.size()];
            switch (ins.op) {
                case OpCode::Add: regs.push_back(a + b); break;
                case OpCode::Sub: regs.push_back(a - b); break;
                case OpCode::MulDamped: regs.push_back(a * b * 0.1); break;
                case OpCode::DivGuarded: regs.push_back(a / (b * b + 1.0)); break;
                case OpCode::ExpDamped: regs.push_back(exp(a * 0.1)); break;
                case OpCode::LogSquare: regs.push_back(log(a * a + 1.0)); break;
                case OpCode::Squash: regs.push_back(a / sqrt(a * a + 1.0)); break;
            }
        }

        // Keep the cosine path live and the root strictly nonlinear.
        Scalar mix = regs.back() + cdist;
        Scalar root = mix / sqrt(mix * mix + 1.0);
        if (out_leaf_nodes) *out_leaf_nodes = std::move(all);
        return root;
    }
};

Program make_program(std::mt19937_64& rng) {
    Program p;
    p.dim = 2 + static_cast<int>(rng() % 5);        // 2..6
    p.num_extra = 2 + static_cast<int>(rng() % 3);  // 2..4
    const int steps = 2 + static_cast<int>(rng() % 4);
    for (int i = 0; i < steps; ++i) {
        Instruction ins;
        ins.op = static_cast<OpCode>(rng() % 7);
        ins.a = static_cast<int>(rng() % 64);
        ins.b = static_cast<int>(rng() % 64);
        p.instructions.push_back(ins);
    }
    return p;
}

std::vector<double> make_leaves(const Program& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> vec_dist(-1.5, 1.5);
    std::uniform_real_distribution<double> extra_dist(0.5, 2.0);
    std::vector<double> leaves(static_cast<std::size_t>(p.num_leaves()));
    for (int v = 0; v < 2; ++v) {
        // Resample until the vector is comfortably away from zero norm.
        while (true) {
            double sq = 0.0;
            for (int d = 0; d < p.dim; ++d) {
                double val = vec_dist(rng);
                leaves[static_cast<std::size_t>(v * p.dim + d)] = val;
                sq += val * val;
            }
            if (sq > 0.25) break;
        }
    }
    for (int i = 0; i < p.num_extra; ++i) {
        leaves[static_cast<std::size_t>(2 * p.dim + i)] = extra_dist(rng);
    }
    return leaves;
}

}  // namespace

GradCheckReport run_random_graph_check(int trials, double tolerance, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("run_random_graph_check: trials must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const double h = 1e-4;

    GradCheckReport report;
    report.trials = trials;

    for (int trial = 0; trial < trials; ++trial) {
        std::seed_seq ss{seed, static_cast<std::uint64_t>(trial)};
        std::mt19937_64 rng(ss);
        Program prog = make_program(rng);
        std::vector<double> leaves = make_leaves(prog, rng);

        Tape tape;
        Vector leaf_nodes;
        Scalar root = prog.evaluate(tape, leaves, &leaf_nodes);
        tape.backward(root);
        std::vector<double> analytic = grads(leaf_nodes);

        bool trial_failed = false;
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            std::vector<double> bumped = leaves;
            bumped[i] = leaves[i] + h;
            Tape tp;
            const double f_plus = prog.evaluate(tp, bumped, nullptr).value();
            bumped[i] = leaves[i] - h;
            Tape tm;
            const double f_minus = prog.evaluate(tm, bumped, nullptr).value();
            const double fd = (f_plus - f_minus) / (2.0 * h);
            if (std::abs(fd) <= 1e-6) continue;
            ++report.coords_checked;
            const double rel = std::abs(analytic[i] - fd) / std::abs(fd);
            report.max_rel_err = std::max(report.max_rel_err, rel);
            if (!(rel <= tolerance)) trial_failed = true;
        }
        if (trial_failed) ++report.failures;
    }

    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace camofs::ad
