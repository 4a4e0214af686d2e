#include "ile/tape.hpp"

#include <cmath>
#include <utility>

#include "ile/errors.hpp"
#include "ile/linalg.hpp"

namespace ile {

int Tape::check(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(values_.size())) throw DimensionError("invalid tape handle");
    return v.id;
}

Var Tape::push(Tensor value, std::function<void(Tape&)> back) {
    if (consumed_) throw NumericError("tape already consumed by backward");
    values_.push_back(std::move(value));
    nodes_.push_back(std::move(back));
    return Var{static_cast<int>(values_.size()) - 1};
}

Var Tape::leaf(Tensor v) {
    check_finite(v, "tape leaf");
    return push(std::move(v), nullptr);
}

Tensor& Tape::grad_slot(int id) {
    if (!grad_set_[id]) {
        grads_[id] = Tensor(values_[id].shape());
        grad_set_[id] = 1;
    }
    return grads_[id];
}

void Tape::accumulate(int id, const Tensor& g) {
    Tensor& slot = grad_slot(id);
    if (!slot.same_shape(g)) throw DimensionError("gradient shape mismatch");
    for (std::int64_t i = 0; i < g.numel(); ++i) slot[i] += g[i];
}

Tensor Tape::grad(Var v) const {
    const int id = check(v);
    if (!consumed_) throw NumericError("grad requested before backward");
    if (!grad_set_[id]) return Tensor(values_[id].shape());
    return grads_[id];
}

void Tape::backward(Var loss) {
    const int lid = check(loss);
    if (consumed_) throw NumericError("tape already consumed by backward");
    if (values_[lid].rank() != 0) throw DimensionError("backward: loss must be a rank-0 scalar");
    grads_.assign(values_.size(), Tensor());
    grad_set_.assign(values_.size(), 0);
    consumed_ = true;
    grad_slot(lid)[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        if (!nodes_[i] || !grad_set_[i]) continue;  // leaf, or loss never touched it
        nodes_[i](*this);
    }
    for (std::size_t i = 0; i < grads_.size(); ++i)
        if (grad_set_[i]) check_finite(grads_[i], "gradient");
}

Var Tape::add(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    Var out = push(ile::add(values_[ia], values_[ib]), nullptr);
    nodes_[out.id] = [ia, ib, io = out.id](Tape& t) {
        t.accumulate(ia, t.grads_[io]);
        t.accumulate(ib, t.grads_[io]);
    };
    return out;
}

Var Tape::sub(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    Var out = push(ile::sub(values_[ia], values_[ib]), nullptr);
    nodes_[out.id] = [ia, ib, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        t.accumulate(ia, g);
        t.accumulate(ib, ile::axpb(g, -1.0, 0.0));
    };
    return out;
}

Var Tape::mul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    Var out = push(ile::mul(values_[ia], values_[ib]), nullptr);
    nodes_[out.id] = [ia, ib, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        t.accumulate(ia, ile::mul(g, t.values_[ib]));
        t.accumulate(ib, ile::mul(g, t.values_[ia]));
    };
    return out;
}

Var Tape::axpb(Var a, double alpha, double beta) {
    const int ia = check(a);
    Var out = push(ile::axpb(values_[ia], alpha, beta), nullptr);
    nodes_[out.id] = [ia, alpha, io = out.id](Tape& t) {
        t.accumulate(ia, ile::axpb(t.grads_[io], alpha, 0.0));
    };
    return out;
}

Var Tape::matmul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    Var out = push(ile::matmul(values_[ia], values_[ib]), nullptr);
    nodes_[out.id] = [ia, ib, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& av = t.values_[ia];
        const Tensor& bv = t.values_[ib];
        if (bv.rank() == 1) {
            // out = A x:  A_bar += g x^T (outer),  x_bar += A^T g
            const int m = av.shape()[0], k = av.shape()[1];
            Tensor ga({m, k});
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) ga.at(i, p) = g[i] * bv[p];
            t.accumulate(ia, ga);
            Tensor gb({k});
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) gb[p] += av.at(i, p) * g[i];
            t.accumulate(ib, gb);
        } else {
            t.accumulate(ia, ile::matmul(g, transpose(bv)));
            t.accumulate(ib, ile::matmul(transpose(av), g));
        }
    };
    return out;
}

Var Tape::sum(Var a) {
    const int ia = check(a);
    Var out = push(ile::sum(values_[ia]), nullptr);
    nodes_[out.id] = [ia, io = out.id](Tape& t) {
        const double g = t.grads_[io][0];
        t.accumulate(ia, Tensor::full(t.values_[ia].shape(), g));
    };
    return out;
}

Var Tape::tanh(Var a) {
    const int ia = check(a);
    Var out = push(tanh_t(values_[ia]), nullptr);
    nodes_[out.id] = [ia, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& y = t.values_[io];
        Tensor ga(g.shape());
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] = g[i] * (1.0 - y[i] * y[i]);
        t.accumulate(ia, ga);
    };
    return out;
}

Var Tape::exp(Var a) {
    const int ia = check(a);
    Var out = push(exp_t(values_[ia]), nullptr);
    nodes_[out.id] = [ia, io = out.id](Tape& t) {
        t.accumulate(ia, ile::mul(t.grads_[io], t.values_[io]));
    };
    return out;
}

Var Tape::abs(Var a) {
    const int ia = check(a);
    Var out = push(abs_t(values_[ia]), nullptr);
    nodes_[out.id] = [ia, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& x = t.values_[ia];
        Tensor ga(g.shape());
        for (std::int64_t i = 0; i < g.numel(); ++i)
            ga[i] = x[i] > 0.0 ? g[i] : (x[i] < 0.0 ? -g[i] : 0.0);
        t.accumulate(ia, ga);
    };
    return out;
}

Var Tape::sqrt(Var a) {
    const int ia = check(a);
    const Tensor& x = values_[ia];
    for (std::int64_t i = 0; i < x.numel(); ++i)
        if (x[i] <= 0.0) throw NumericError("traced sqrt requires strictly positive input");
    Var out = push(sqrt_t(x), nullptr);
    nodes_[out.id] = [ia, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& y = t.values_[io];
        Tensor ga(g.shape());
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] = 0.5 * g[i] / y[i];
        t.accumulate(ia, ga);
    };
    return out;
}

Var Tape::relu(Var a) {
    const int ia = check(a);
    Var out = push(relu_t(values_[ia]), nullptr);
    nodes_[out.id] = [ia, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        const Tensor& x = t.values_[ia];
        Tensor ga(g.shape());
        for (std::int64_t i = 0; i < g.numel(); ++i) ga[i] = x[i] > 0.0 ? g[i] : 0.0;
        t.accumulate(ia, ga);
    };
    return out;
}

Var Tape::slice(Var a, int start, int len) {
    const int ia = check(a);
    Var out = push(slice_vec(values_[ia], start, len), nullptr);
    nodes_[out.id] = [ia, start, len, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        Tensor ga(t.values_[ia].shape());
        for (int i = 0; i < len; ++i) ga[start + i] = g[i];
        t.accumulate(ia, ga);
    };
    return out;
}

Var Tape::concat(std::span<const Var> parts) {
    std::vector<int> ids;
    std::vector<Tensor> vals;
    ids.reserve(parts.size());
    vals.reserve(parts.size());
    for (Var p : parts) {
        ids.push_back(check(p));
        vals.push_back(values_[ids.back()]);
    }
    Var out = push(concat_vecs(vals), nullptr);
    nodes_[out.id] = [ids = std::move(ids), io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        int off = 0;
        for (int id : ids) {
            const int len = t.values_[id].shape()[0];
            Tensor ga({len});
            for (int i = 0; i < len; ++i) ga[i] = g[off + i];
            t.accumulate(id, ga);
            off += len;
        }
    };
    return out;
}

Var Tape::concat_rows(std::span<const Var> blocks) {
    std::vector<int> ids;
    std::vector<Tensor> vals;
    for (Var b : blocks) {
        ids.push_back(check(b));
        vals.push_back(values_[ids.back()]);
    }
    Var out = push(ile::concat_rows(vals), nullptr);
    nodes_[out.id] = [ids = std::move(ids), io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        const int cols = g.shape()[1];
        int roff = 0;
        for (int id : ids) {
            const int rows = t.values_[id].shape()[0];
            Tensor ga({rows, cols});
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) ga.at(r, c) = g.at(roff + r, c);
            t.accumulate(id, ga);
            roff += rows;
        }
    };
    return out;
}

Var Tape::permute(Var a, std::vector<int> perm) {
    const int ia = check(a);
    Var out = push(permute_vec(values_[ia], perm), nullptr);
    nodes_[out.id] = [ia, perm = std::move(perm), io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < perm.size(); ++i) ga[perm[i]] += g[static_cast<std::int64_t>(i)];
        t.accumulate(ia, ga);
    };
    return out;
}

Var Tape::assemble_jnf(Var alpha, Var beta) {
    const int ial = check(alpha), ibe = check(beta);
    const Tensor& av = values_[ial];
    const Tensor& bv = values_[ibe];
    if (av.rank() != 1 || !av.same_shape(bv)) throw DimensionError("assemble_jnf: equal-length vectors required");
    const int half = av.shape()[0];
    Tensor a({2 * half, 2 * half});
    for (int k = 0; k < half; ++k) {
        a.at(2 * k, 2 * k) = av[k];
        a.at(2 * k, 2 * k + 1) = bv[k];
        a.at(2 * k + 1, 2 * k) = -bv[k];
        a.at(2 * k + 1, 2 * k + 1) = av[k];
    }
    Var out = push(std::move(a), nullptr);
    nodes_[out.id] = [ial, ibe, half, io = out.id](Tape& t) {
        const Tensor& g = t.grads_[io];
        Tensor ga({half}), gb({half});
        for (int k = 0; k < half; ++k) {
            ga[k] = g.at(2 * k, 2 * k) + g.at(2 * k + 1, 2 * k + 1);
            gb[k] = g.at(2 * k, 2 * k + 1) - g.at(2 * k + 1, 2 * k);
        }
        t.accumulate(ial, ga);
        t.accumulate(ibe, gb);
    };
    return out;
}

Var Tape::ridge_solve(Var m, Var rhs, double lambda) {
    const int im = check(m), ir = check(rhs);
    const Tensor& mv = values_[im];
    const Tensor& rv = values_[ir];
    if (mv.rank() != 2) throw DimensionError("ridge_solve: rank-2 system matrix required");
    Tensor g = gram(mv);
    for (int i = 0; i < g.shape()[0]; ++i) g.at(i, i) += lambda;
    Tensor l = cholesky(g);
    Tensor x = cholesky_solve(l, ile::matmul(transpose(mv), rv));
    Var out = push(std::move(x), nullptr);
    // The factor is reused by the adjoint solve.
    nodes_[out.id] = [im, ir, l = std::move(l), io = out.id](Tape& t) {
        const Tensor& gx = t.grads_[io];
        const Tensor& mv = t.values_[im];
        const Tensor& rv = t.values_[ir];
        const Tensor& xv = t.values_[io];
        const Tensor w = cholesky_solve(l, gx);  // (M^T M + lambda I)^-1 gx
        // rhs_bar = M w
        t.accumulate(ir, ile::matmul(mv, w));
        // M_bar = r w^T - M (w x^T + x w^T)
        const int p = mv.shape()[0], q = mv.shape()[1];
        const bool vec = xv.rank() == 1;
        const int rcols = vec ? 1 : xv.shape()[1];
        auto el = [rcols](const Tensor& t2, int r, int c) {
            return t2.data()[static_cast<std::size_t>(r) * rcols + c];
        };
        Tensor gm({p, q});
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < q; ++j) {
                double s = 0.0;
                for (int c = 0; c < rcols; ++c) s += el(rv, i, c) * el(w, j, c);
                gm.at(i, j) = s;
            }
        // symmetric correction: S = w x^T + x w^T (q x q), gm -= M S
        Tensor s({q, q});
        for (int a2 = 0; a2 < q; ++a2)
            for (int b2 = 0; b2 < q; ++b2) {
                double v = 0.0;
                for (int c = 0; c < rcols; ++c) v += el(w, a2, c) * el(xv, b2, c) + el(xv, a2, c) * el(w, b2, c);
                s.at(a2, b2) = v;
            }
        const Tensor ms = ile::matmul(mv, s);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < q; ++j) gm.at(i, j) -= ms.at(i, j);
        t.accumulate(im, gm);
    };
    return out;
}

}  // namespace ile
