#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ile/tensor.hpp"

namespace ile {

// Handle into a Tape's value store.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Records one node per primitive in execution order and
// replays them strictly backward, summing gradients across fan-out. A tape is
// confined to one execution context and is consumed by backward().
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Inserts an input value. Gradients accumulate for every Var; whether a
    // leaf is a trainable parameter or a constant is the caller's concern.
    Var leaf(Tensor v);

    const Tensor& value(Var v) const { return values_[check(v)]; }
    // Gradient of the loss w.r.t. v; zero tensor if the loss never touched v.
    // Only valid after backward().
    Tensor grad(Var v) const;

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var axpb(Var a, double alpha, double beta);
    Var matmul(Var a, Var b);
    Var sum(Var a);
    Var tanh(Var a);
    Var exp(Var a);
    Var abs(Var a);    // subgradient 0 at 0
    Var sqrt(Var a);   // requires strictly positive entries when traced
    Var relu(Var a);   // max(x, 0), subgradient 0 at 0
    Var slice(Var a, int start, int len);
    Var concat(std::span<const Var> parts);
    Var concat_rows(std::span<const Var> blocks);
    Var permute(Var a, std::vector<int> perm);

    // Block-diagonal real-JNF assembly from per-block (alpha, beta) vectors
    // of length n/2: blocks [[a, b], [-b, a]].
    Var assemble_jnf(Var alpha, Var beta);

    // Differentiable regularized least squares: x = (M^T M + lambda I)^-1 M^T rhs.
    // Backward applies the adjoint of the linear solve to both M and rhs.
    Var ridge_solve(Var m, Var rhs, double lambda);

    // Reverse sweep from a scalar loss. May be called once; the tape is
    // consumed afterwards (no further recording or backward).
    void backward(Var loss);

    std::size_t size() const { return values_.size(); }

private:
    int check(Var v) const;
    Var push(Tensor value, std::function<void(Tape&)> back);
    void accumulate(int id, const Tensor& g);
    Tensor& grad_slot(int id);

    std::vector<Tensor> values_;
    std::vector<Tensor> grads_;
    std::vector<char> grad_set_;
    std::vector<std::function<void(Tape&)>> nodes_;
    bool consumed_ = false;
};

}  // namespace ile
