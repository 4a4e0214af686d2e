#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ile/tape.hpp"
#include "ile/tensor.hpp"

namespace ile {

// Two-layer feed-forward map  W2 tanh(W1 x + b1) + b2. The output layer is
// zero-initialized so a freshly built coupling layer is the identity.
struct Subnet {
    Tensor w1;  // hidden x in
    Tensor b1;  // hidden
    Tensor w2;  // out x hidden
    Tensor b2;  // out

    Tensor eval(const Tensor& x) const;
    Var eval(Tape& t, Var x, const struct TracedSubnet& bound) const;
};

struct TracedSubnet {
    Var w1, b1, w2, b2;
};

// One affine coupling step: split h into [left | right], rescale the right
// half by exp(s_hat(left)) and shift by b(left), then apply a fixed
// permutation of all D indices. Always invertible since exp(.) > 0.
struct CouplingLayer {
    Subnet scale;  // left -> raw log-scales s_hat
    Subnet shift;  // left -> additive shift
    std::vector<int> perm;      // out[i] = concat[perm[i]]
    std::vector<int> perm_inv;  // concat[j] = out[perm_inv ... ] inverse map

    int dim() const { return static_cast<int>(perm.size()); }
    int left_size() const { return (dim() + 1) / 2; }
    int right_size() const { return dim() / 2; }

    void set_perm(std::vector<int> p);
};

struct TracedLayer {
    TracedSubnet scale, shift;
};

// (h_next, per-layer log-det). The log-det is the sum of the raw log-scales;
// the permutation is unimodular and contributes nothing.
std::pair<Tensor, double> coupling_forward(const CouplingLayer& layer, const Tensor& h);
Tensor coupling_inverse(const CouplingLayer& layer, const Tensor& h_next);

// Invertible encoder g: a stack of coupling layers over flattened frames of
// length D. Depth 0 is the exact identity (used for pure system-id runs).
class FlowNetwork {
public:
    FlowNetwork() = default;
    // Layer 0 keeps the identity permutation, deeper layers get seed-derived
    // random permutations. Subnets start as the identity map.
    static FlowNetwork init(int dim, int depth, int hidden, std::uint64_t seed);

    int dim() const { return dim_; }
    int depth() const { return static_cast<int>(layers_.size()); }
    std::vector<CouplingLayer>& layers() { return layers_; }
    const std::vector<CouplingLayer>& layers() const { return layers_; }

    // z and log|det dz/do| at the input frame.
    std::pair<Tensor, double> encode(const Tensor& frame) const;
    Tensor decode(const Tensor& z) const;

    // Traced mirror: binds all subnet parameters as tape leaves (in the same
    // order as parameter_names()) and evaluates differentiably.
    std::vector<Var> bind(Tape& t, std::vector<TracedLayer>& bound) const;
    std::pair<Var, Var> encode(Tape& t, const std::vector<TracedLayer>& bound, Var frame) const;

    std::vector<std::string> parameter_names() const;
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;

private:
    int dim_ = 0;
    std::vector<CouplingLayer> layers_;
};

// Independent log-det oracle: assembles the full D x D Jacobian of encode by
// central differences and takes log|det| through an LU factorization.
// Intended for D <= 16.
double brute_force_logdet(const FlowNetwork& net, const Tensor& frame, double h = 1e-6);

// Same construction for decode's Jacobian at z (change-of-variables checks).
double brute_force_logdet_decode(const FlowNetwork& net, const Tensor& z, double h = 1e-6);

}  // namespace ile
