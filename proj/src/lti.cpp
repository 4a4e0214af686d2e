#include "ile/lti.hpp"

#include <cmath>

#include "ile/errors.hpp"
#include "ile/linalg.hpp"
#include "ile/rng.hpp"

namespace ile {

namespace {

void check_params(const JnfParams& p) {
    if (p.theta_alpha.rank() != 1 || !p.theta_alpha.same_shape(p.theta_beta))
        throw DimensionError("jnf parameters must be equal-length vectors");
    if (!(p.epsilon > 0.0) || p.epsilon > 1e-6) throw ConfigError("jnf epsilon must lie in (0, 1e-6]");
}

}  // namespace

std::pair<Tensor, Tensor> jnf_map(const JnfParams& p) {
    check_params(p);
    const std::int64_t half = p.theta_alpha.numel();
    Tensor alpha({static_cast<int>(half)});
    Tensor beta({static_cast<int>(half)});
    for (std::int64_t k = 0; k < half; ++k) {
        const double a = std::max((1.0 - p.epsilon) - std::abs(p.theta_alpha[k]), 0.0);
        alpha[k] = a;
        beta[k] = std::max(1.0 - std::abs(p.theta_beta[k]), 0.0) * std::sqrt(1.0 - a * a);
    }
    return {std::move(alpha), std::move(beta)};
}

std::pair<Var, Var> jnf_map(Tape& t, Var theta_alpha, Var theta_beta, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1e-6) throw ConfigError("jnf epsilon must lie in (0, 1e-6]");
    const Var alpha = t.relu(t.axpb(t.abs(theta_alpha), -1.0, 1.0 - epsilon));
    // alpha <= 1 - eps keeps 1 - alpha^2 strictly positive for the sqrt.
    const Var root = t.sqrt(t.axpb(t.mul(alpha, alpha), -1.0, 1.0));
    const Var beta = t.mul(t.relu(t.axpb(t.abs(theta_beta), -1.0, 1.0)), root);
    return {alpha, beta};
}

Tensor assemble_blocks(const Tensor& alpha, const Tensor& beta) {
    if (alpha.rank() != 1 || !alpha.same_shape(beta))
        throw DimensionError("assemble_blocks: equal-length vectors required");
    const int half = alpha.shape()[0];
    Tensor a({2 * half, 2 * half});
    for (int k = 0; k < half; ++k) {
        a.at(2 * k, 2 * k) = alpha[k];
        a.at(2 * k, 2 * k + 1) = beta[k];
        a.at(2 * k + 1, 2 * k) = -beta[k];
        a.at(2 * k + 1, 2 * k + 1) = alpha[k];
    }
    return a;
}

Tensor build_state_matrix(const JnfParams& p) {
    auto [alpha, beta] = jnf_map(p);
    return assemble_blocks(alpha, beta);
}

double spectral_radius_blocks(const Tensor& alpha, const Tensor& beta) {
    double r = 0.0;
    for (std::int64_t k = 0; k < alpha.numel(); ++k)
        r = std::max(r, std::sqrt(alpha[k] * alpha[k] + beta[k] * beta[k]));
    return r;
}

double spectral_radius(const JnfParams& p) {
    auto [alpha, beta] = jnf_map(p);
    return spectral_radius_blocks(alpha, beta);
}

Tensor observability_stack(const Tensor& a, const Tensor& c, int horizon) {
    if (horizon < 1) throw ConfigError("observability horizon must be >= 1");
    if (c.rank() != 2 || a.rank() != 2 || a.shape()[0] != a.shape()[1] || c.shape()[1] != a.shape()[0])
        throw DimensionError("observability_stack: C is DxN, A is NxN");
    const int d = c.shape()[0];
    const int n = c.shape()[1];
    Tensor o({horizon * d, n});
    Tensor cur = c;
    for (int t = 0; t < horizon; ++t) {
        for (int r = 0; r < d; ++r)
            for (int j = 0; j < n; ++j) o.at(t * d + r, j) = cur.at(r, j);
        if (t + 1 < horizon) cur = matmul(cur, a);
    }
    return o;
}

Var observability_stack(Tape& t, Var a, Var c, int horizon) {
    if (horizon < 1) throw ConfigError("observability horizon must be >= 1");
    std::vector<Var> blocks;
    blocks.reserve(static_cast<std::size_t>(horizon));
    Var cur = c;
    for (int i = 0; i < horizon; ++i) {
        blocks.push_back(cur);
        if (i + 1 < horizon) cur = t.matmul(cur, a);
    }
    return t.concat_rows(blocks);
}

Tensor infer_initial_state(const Tensor& o, const Tensor& z, double lambda) {
    if (z.rank() != 1 || o.rank() != 2 || o.shape()[0] != z.shape()[0])
        throw DimensionError("infer_initial_state: stacked vector length must match the stack rows");
    return ridge_solve(o, z, lambda);
}

std::vector<Tensor> rollout(const Tensor& a, const Tensor& c, const Tensor& x0, int horizon) {
    if (horizon < 1) throw ConfigError("rollout horizon must be >= 1");
    if (x0.rank() != 1 || c.rank() != 2 || c.shape()[1] != x0.shape()[0])
        throw DimensionError("rollout: C columns must match the state length");
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(horizon));
    Tensor x = x0;
    for (int t = 0; t < horizon; ++t) {
        out.push_back(matmul(c, x));
        if (t + 1 < horizon) x = matmul(a, x);
    }
    return out;
}

Tensor smoother_oracle(const Tensor& a, const Tensor& c, const std::vector<Tensor>& frames,
                       double prior_cov) {
    if (!(prior_cov > 0.0)) throw ConfigError("smoother prior covariance must be positive");
    if (frames.empty()) throw DimensionError("smoother_oracle: at least one observation required");
    const int d = c.shape()[0];
    const int n = c.shape()[1];
    Tensor info({n, n});
    for (int i = 0; i < n; ++i) info.at(i, i) = 1.0 / prior_cov;
    Tensor b({n});
    Tensor phi = c;  // Phi_t = C A^t, advanced in step with the loop
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const Tensor& z = frames[t];
        if (z.rank() != 1 || z.shape()[0] != d) throw DimensionError("smoother_oracle: frame length mismatch");
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int r = 0; r < d; ++r) s += phi.at(r, i) * phi.at(r, j);
                info.at(i, j) += s;
            }
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int r = 0; r < d; ++r) s += phi.at(r, i) * z[r];
            b[i] += s;
        }
        if (t + 1 < frames.size()) phi = matmul(phi, a);
    }
    return lu_solve(info, b);
}

std::vector<Tensor> simulate_lti(const Tensor& a, const Tensor& c, const Tensor& x0, int horizon,
                                 double noise_std, std::uint64_t seed) {
    if (noise_std < 0.0) throw ConfigError("noise std must be >= 0");
    std::vector<Tensor> frames = rollout(a, c, x0, horizon);
    if (noise_std > 0.0) {
        Rng rng(seed);
        for (Tensor& f : frames)
            for (std::int64_t i = 0; i < f.numel(); ++i) f[i] += noise_std * rng.normal();
    }
    return frames;
}

}  // namespace ile
