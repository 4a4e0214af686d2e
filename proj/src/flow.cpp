#include "ile/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>

#include "ile/errors.hpp"
#include "ile/linalg.hpp"
#include "ile/rng.hpp"

namespace ile {

Tensor Subnet::eval(const Tensor& x) const {
    const Tensor h = tanh_t(add(matmul(w1, x), b1));
    return add(matmul(w2, h), b2);
}

Var Subnet::eval(Tape& t, Var x, const TracedSubnet& bound) const {
    const Var h = t.tanh(t.add(t.matmul(bound.w1, x), bound.b1));
    return t.add(t.matmul(bound.w2, h), bound.b2);
}

void CouplingLayer::set_perm(std::vector<int> p) {
    perm = std::move(p);
    perm_inv.assign(perm.size(), 0);
    std::vector<char> seen(perm.size(), 0);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const int j = perm[i];
        if (j < 0 || j >= static_cast<int>(perm.size()) || seen[j])
            throw ConfigError("coupling permutation is not a bijection");
        seen[j] = 1;
        perm_inv[j] = static_cast<int>(i);
    }
}

std::pair<Tensor, double> coupling_forward(const CouplingLayer& layer, const Tensor& h) {
    const int d = layer.dim();
    if (h.rank() != 1 || h.shape()[0] != d) throw DimensionError("coupling_forward: expected vector of layer dim");
    check_finite(h, "coupling input");
    const int l = layer.left_size();
    const int r = layer.right_size();
    const Tensor left = slice_vec(h, 0, l);
    const Tensor right = slice_vec(h, l, r);
    const Tensor s_hat = layer.scale.eval(left);
    const Tensor shift = layer.shift.eval(left);
    Tensor out({d});
    double logdet = 0.0;
    for (int i = 0; i < r; ++i) logdet += s_hat[i];
    Tensor mixed({d});
    for (int i = 0; i < l; ++i) mixed[i] = left[i];
    for (int i = 0; i < r; ++i) mixed[l + i] = std::exp(s_hat[i]) * right[i] + shift[i];
    check_finite(mixed, "coupling forward");
    return {permute_vec(mixed, layer.perm), logdet};
}

Tensor coupling_inverse(const CouplingLayer& layer, const Tensor& h_next) {
    const int d = layer.dim();
    if (h_next.rank() != 1 || h_next.shape()[0] != d)
        throw DimensionError("coupling_inverse: expected vector of layer dim");
    check_finite(h_next, "coupling_inverse input");
    const int l = layer.left_size();
    const int r = layer.right_size();
    // undo the permutation: out[i] = mixed[perm[i]]  =>  mixed[j] = out[perm_inv-of-j]
    Tensor mixed = permute_vec(h_next, layer.perm_inv);
    const Tensor left = slice_vec(mixed, 0, l);
    const Tensor s_hat = layer.scale.eval(left);
    const Tensor shift = layer.shift.eval(left);
    Tensor out({d});
    for (int i = 0; i < l; ++i) out[i] = left[i];
    for (int i = 0; i < r; ++i) out[l + i] = (mixed[l + i] - shift[i]) * std::exp(-s_hat[i]);
    check_finite(out, "coupling inverse");
    return out;
}

FlowNetwork FlowNetwork::init(int dim, int depth, int hidden, std::uint64_t seed) {
    if (dim < 2) throw ConfigError("flow dim must be >= 2");
    if (depth < 0) throw ConfigError("flow depth must be >= 0");
    if (depth > 0 && hidden < 1) throw ConfigError("flow hidden width must be >= 1");
    FlowNetwork net;
    net.dim_ = dim;
    const int l = (dim + 1) / 2;
    const int r = dim / 2;
    for (int li = 0; li < depth; ++li) {
        CouplingLayer layer;
        Rng rng(mix_seed(seed, 0x10000 + li));
        auto make_subnet = [&](Subnet& s) {
            s.w1 = Tensor({hidden, l});
            const double std1 = 1.0 / std::sqrt(static_cast<double>(l));
            for (std::int64_t i = 0; i < s.w1.numel(); ++i) s.w1[i] = std1 * rng.normal();
            s.b1 = Tensor({hidden});
            s.w2 = Tensor({r, hidden});  // zero: layer starts as the identity
            s.b2 = Tensor({r});
        };
        make_subnet(layer.scale);
        make_subnet(layer.shift);
        std::vector<int> perm(dim);
        std::iota(perm.begin(), perm.end(), 0);
        if (li > 0) {
            for (int i = dim - 1; i > 0; --i) {
                const int j = static_cast<int>(rng.uniform_int(0, i));
                std::swap(perm[i], perm[j]);
            }
        }
        layer.set_perm(std::move(perm));
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

std::pair<Tensor, double> FlowNetwork::encode(const Tensor& frame) const {
    if (frame.rank() != 1 || frame.shape()[0] != dim_) throw DimensionError("encode: frame length mismatch");
    check_finite(frame, "encode input");
    Tensor h = frame;
    double logdet = 0.0;
    for (const CouplingLayer& layer : layers_) {
        auto [next, ld] = coupling_forward(layer, h);
        h = std::move(next);
        logdet += ld;
    }
    return {std::move(h), logdet};
}

Tensor FlowNetwork::decode(const Tensor& z) const {
    if (z.rank() != 1 || z.shape()[0] != dim_) throw DimensionError("decode: embedding length mismatch");
    check_finite(z, "decode input");
    Tensor h = z;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) h = coupling_inverse(*it, h);
    return h;
}

std::vector<Var> FlowNetwork::bind(Tape& t, std::vector<TracedLayer>& bound) const {
    std::vector<Var> vars;
    bound.clear();
    for (const CouplingLayer& layer : layers_) {
        TracedLayer tl;
        auto bind_subnet = [&](const Subnet& s, TracedSubnet& ts) {
            ts.w1 = t.leaf(s.w1);
            ts.b1 = t.leaf(s.b1);
            ts.w2 = t.leaf(s.w2);
            ts.b2 = t.leaf(s.b2);
            vars.insert(vars.end(), {ts.w1, ts.b1, ts.w2, ts.b2});
        };
        bind_subnet(layer.scale, tl.scale);
        bind_subnet(layer.shift, tl.shift);
        bound.push_back(tl);
    }
    return vars;
}

std::pair<Var, Var> FlowNetwork::encode(Tape& t, const std::vector<TracedLayer>& bound, Var frame) const {
    Var h = frame;
    Var logdet = t.leaf(Tensor::scalar(0.0));
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const CouplingLayer& layer = layers_[li];
        const int l = layer.left_size();
        const int r = layer.right_size();
        const Var left = t.slice(h, 0, l);
        const Var right = t.slice(h, l, r);
        const Var s_hat = layer.scale.eval(t, left, bound[li].scale);
        const Var shift = layer.shift.eval(t, left, bound[li].shift);
        const Var scaled = t.add(t.mul(t.exp(s_hat), right), shift);
        const std::array<Var, 2> halves{left, scaled};
        h = t.permute(t.concat(halves), layer.perm);
        logdet = t.add(logdet, t.sum(s_hat));
    }
    return {h, logdet};
}

std::vector<std::string> FlowNetwork::parameter_names() const {
    std::vector<std::string> names;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const std::string base = "flow.layer" + std::to_string(li);
        for (const char* sn : {".scale", ".shift"})
            for (const char* w : {".w1", ".b1", ".w2", ".b2"}) names.push_back(base + sn + w);
    }
    return names;
}

std::vector<Tensor*> FlowNetwork::parameters() {
    std::vector<Tensor*> out;
    for (CouplingLayer& layer : layers_)
        for (Subnet* s : {&layer.scale, &layer.shift})
            for (Tensor* w : {&s->w1, &s->b1, &s->w2, &s->b2}) out.push_back(w);
    return out;
}

std::vector<const Tensor*> FlowNetwork::parameters() const {
    std::vector<const Tensor*> out;
    for (const CouplingLayer& layer : layers_)
        for (const Subnet* s : {&layer.scale, &layer.shift})
            for (const Tensor* w : {&s->w1, &s->b1, &s->w2, &s->b2}) out.push_back(w);
    return out;
}

namespace {

double jacobian_logdet(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
    const int d = x.shape()[0];
    if (d > 16) throw ConfigError("brute-force Jacobian limited to D <= 16");
    Tensor jac({d, d});
    Tensor xp = x;
    for (int j = 0; j < d; ++j) {
        const double saved = xp[j];
        xp[j] = saved + h;
        const Tensor fp = f(xp);
        xp[j] = saved - h;
        const Tensor fm = f(xp);
        xp[j] = saved;
        for (int i = 0; i < d; ++i) jac.at(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
    return lu_log_abs_det(jac);
}

}  // namespace

double brute_force_logdet(const FlowNetwork& net, const Tensor& frame, double h) {
    return jacobian_logdet([&](const Tensor& x) { return net.encode(x).first; }, frame, h);
}

double brute_force_logdet_decode(const FlowNetwork& net, const Tensor& z, double h) {
    return jacobian_logdet([&](const Tensor& x) { return net.decode(x); }, z, h);
}

}  // namespace ile
