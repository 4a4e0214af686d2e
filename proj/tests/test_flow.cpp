#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "ile/errors.hpp"
#include "ile/flow.hpp"
#include "ile/gradcheck.hpp"
#include "ile/rng.hpp"
#include "ile/tape.hpp"

using namespace ile;

namespace {

Tensor random_vec(int n, Rng& rng, double scale = 1.0) {
    Tensor t({n});
    for (int i = 0; i < n; ++i) t[i] = scale * rng.normal();
    return t;
}

// Fills every subnet weight (including the zero-initialized output layers)
// so the network is a generic smooth bijection rather than the identity.
void randomize(FlowNetwork& net, std::uint64_t seed, double scale = 0.3) {
    Rng rng(seed);
    for (Tensor* p : net.parameters())
        for (std::int64_t i = 0; i < p->numel(); ++i) (*p)[i] = scale * rng.normal();
}

// Sets the scale subnet of one layer to the constant log_scale and the shift
// subnet to the constant shift (w2 = 0, b2 = const).
void force_constant(CouplingLayer& layer, double log_scale, double shift) {
    layer.scale.w2 = Tensor(layer.scale.w2.shape());
    layer.scale.b2 = Tensor::full(layer.scale.b2.shape(), log_scale);
    layer.shift.w2 = Tensor(layer.shift.w2.shape());
    layer.shift.b2 = Tensor::full(layer.shift.b2.shape(), shift);
}

}  // namespace

TEST_CASE("depth zero is the exact identity encoder") {
    FlowNetwork net = FlowNetwork::init(6, 0, 0, 1);
    Rng rng(2);
    const Tensor o = random_vec(6, rng);
    const auto [z, logdet] = net.encode(o);
    CHECK(z.bit_equal(o));
    CHECK(logdet == 0.0);
    CHECK(net.decode(z).bit_equal(o));
    CHECK(net.parameters().empty());
}

TEST_CASE("freshly initialized layers are identity couplings") {
    FlowNetwork net = FlowNetwork::init(8, 3, 16, 5);
    // layer 0 keeps the identity permutation
    for (int i = 0; i < 8; ++i) CHECK(net.layers()[0].perm[i] == i);
    Rng rng(6);
    const Tensor o = random_vec(8, rng);
    const auto [z, logdet] = net.encode(o);
    CHECK(logdet == 0.0);
    // composed permutations only: the multiset of values is preserved
    Tensor expect = o;
    for (const CouplingLayer& layer : net.layers()) expect = permute_vec(expect, layer.perm);
    CHECK(z.bit_equal(expect));
    CHECK(net.decode(z).bit_equal(o));
}

TEST_CASE("constant-scale layer: logdet and inverse recovery") {
    FlowNetwork net = FlowNetwork::init(4, 1, 8, 3);
    force_constant(net.layers()[0], std::log(2.0), 0.0);
    const Tensor h({4}, {7.0, -3.0, 2.0, 4.0});
    const auto [out, logdet] = coupling_forward(net.layers()[0], h);
    CHECK(logdet == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(out[2] == doctest::Approx(4.0));
    CHECK(out[3] == doctest::Approx(8.0));
    const Tensor back = coupling_inverse(net.layers()[0], out);
    CHECK(back[2] == doctest::Approx(2.0));
    CHECK(back[3] == doctest::Approx(4.0));

    force_constant(net.layers()[0], std::log(3.0), 0.0);
    const auto [z, ld3] = net.encode(h);
    CHECK(ld3 == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("analytic logdet matches the brute-force Jacobian oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        FlowNetwork net = FlowNetwork::init(6, 3, 8, 100 + trial);
        randomize(net, 200 + trial);
        const Tensor o = random_vec(6, rng);
        const auto [z, logdet] = net.encode(o);
        CHECK(logdet == doctest::Approx(brute_force_logdet(net, o)).epsilon(1e-8));
        // change of variables: the decoder Jacobian at z carries -logdet
        CHECK(logdet == doctest::Approx(-brute_force_logdet_decode(net, z)).epsilon(1e-7));
    }
}

TEST_CASE("brute-force oracle on closed-form cases") {
    FlowNetwork ident = FlowNetwork::init(4, 2, 8, 9);
    Rng rng(8);
    const Tensor o = random_vec(4, rng);
    CHECK(brute_force_logdet(ident, o) == doctest::Approx(0.0).epsilon(1e-9));
    FlowNetwork scale2 = FlowNetwork::init(4, 1, 8, 10);
    force_constant(scale2.layers()[0], std::log(5.0), 1.0);
    CHECK(brute_force_logdet(scale2, o) == doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-8));
}

TEST_CASE("encode/decode roundtrips at tight tolerance") {
    Rng rng(11);
    FlowNetwork net = FlowNetwork::init(16, 4, 12, 77);
    randomize(net, 78);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor o = random_vec(16, rng);
        const auto [z, logdet] = net.encode(o);
        CHECK(max_abs(sub(net.decode(z), o)) < 1e-9);
        const Tensor z2 = random_vec(16, rng);
        CHECK(max_abs(sub(net.encode(net.decode(z2)).first, z2)) < 1e-9);
    }
}

TEST_CASE("zero maps to zero while subnet biases stay zero") {
    FlowNetwork net = FlowNetwork::init(6, 3, 8, 13);
    // randomize only the input layers; b1, w2, b2 keep their zero init
    Rng rng(14);
    for (CouplingLayer& layer : net.layers())
        for (Subnet* s : {&layer.scale, &layer.shift})
            for (std::int64_t i = 0; i < s->w1.numel(); ++i) s->w1[i] = rng.normal();
    const Tensor zero({6});
    const auto [z, logdet] = net.encode(zero);
    CHECK(max_abs(z) == 0.0);
    CHECK(max_abs(net.decode(zero)) == 0.0);
}

TEST_CASE("traced encode equals the plain path and differentiates correctly") {
    FlowNetwork net = FlowNetwork::init(4, 2, 6, 21);
    randomize(net, 22);
    Rng rng(23);
    const Tensor o = random_vec(4, rng);
    const auto [z_plain, ld_plain] = net.encode(o);

    Tape t;
    std::vector<TracedLayer> bound;
    const std::vector<Var> params = net.bind(t, bound);
    CHECK(params.size() == net.parameters().size());
    const auto [z_var, ld_var] = net.encode(t, bound, t.leaf(o));
    CHECK(t.value(z_var).bit_equal(z_plain));
    CHECK(t.value(ld_var).scalar_value() == ld_plain);

    // gradient of (weighted z + logdet) w.r.t. every subnet parameter
    std::vector<Tensor> pvals;
    for (Tensor* p : net.parameters()) pvals.push_back(*p);

    Rng wrng(24);
    const Tensor w = random_vec(4, wrng);
    const Var loss = t.add(t.sum(t.mul(z_var, t.leaf(w))), ld_var);
    t.backward(loss);
    std::vector<Tensor> grads;
    for (Var v : params) grads.push_back(t.grad(v));

    const ValueFn f = [&](std::span<const Tensor> ps) {
        FlowNetwork probe = FlowNetwork::init(4, 2, 6, 21);
        std::vector<Tensor*> dst = probe.parameters();
        for (std::size_t i = 0; i < dst.size(); ++i) *dst[i] = ps[i];
        const auto [z, ld] = probe.encode(o);
        double s = ld;
        for (int i = 0; i < 4; ++i) s += w[i] * z[i];
        return s;
    };
    CHECK(finite_diff_check(f, pvals, grads, 1e-5) < 1e-5);
}

TEST_CASE("network construction is deterministic and validated") {
    FlowNetwork a = FlowNetwork::init(10, 4, 8, 42);
    FlowNetwork b = FlowNetwork::init(10, 4, 8, 42);
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->bit_equal(*pb[i]));
    for (std::size_t li = 0; li < a.layers().size(); ++li)
        CHECK(a.layers()[li].perm == b.layers()[li].perm);

    FlowNetwork c = FlowNetwork::init(10, 4, 8, 43);
    bool any_differs = false;
    for (std::size_t li = 1; li < c.layers().size(); ++li)
        if (c.layers()[li].perm != a.layers()[li].perm) any_differs = true;
    CHECK(any_differs);

    CHECK(a.parameter_names().size() == 4 * 8);
    CHECK(a.parameter_names()[0] == "flow.layer0.scale.w1");

    CHECK_THROWS_AS(FlowNetwork::init(1, 2, 8, 1), ConfigError);
    CHECK_THROWS_AS(FlowNetwork::init(4, -1, 8, 1), ConfigError);
    CHECK_THROWS_AS(FlowNetwork::init(4, 2, 0, 1), ConfigError);

    CouplingLayer layer;
    CHECK_THROWS_AS(layer.set_perm({0, 0, 1}), ConfigError);
    CHECK_THROWS_AS(layer.set_perm({0, 2, 3}), ConfigError);
}

TEST_CASE("odd dimension splits ceil/floor") {
    FlowNetwork net = FlowNetwork::init(5, 2, 6, 31);
    CHECK(net.layers()[0].left_size() == 3);
    CHECK(net.layers()[0].right_size() == 2);
    randomize(net, 32);
    Rng rng(33);
    const Tensor o = random_vec(5, rng);
    const auto [z, logdet] = net.encode(o);
    CHECK(max_abs(sub(net.decode(z), o)) < 1e-9);
    CHECK(logdet == doctest::Approx(brute_force_logdet(net, o)).epsilon(1e-8));
}
