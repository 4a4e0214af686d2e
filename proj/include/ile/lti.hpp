#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ile/tape.hpp"
#include "ile/tensor.hpp"

namespace ile {

// Unconstrained parameters of the 2x2-block real-JNF state matrix. The
// derived (alpha, beta) pairs always give spectral radius <= 1, so A^t stays
// bounded for any parameter value the optimizer can reach.
struct JnfParams {
    Tensor theta_alpha;  // length n/2
    Tensor theta_beta;   // length n/2
    double epsilon = 1e-14;

    int state_dim() const { return 2 * static_cast<int>(theta_alpha.numel()); }
};

// alpha = max((1-eps) - |theta_a|, 0); beta = max(1 - |theta_b|, 0) * sqrt(1 - alpha^2).
// Subgradient 0 at the clamp kinks and at |.|'s corner.
std::pair<Tensor, Tensor> jnf_map(const JnfParams& p);
std::pair<Var, Var> jnf_map(Tape& t, Var theta_alpha, Var theta_beta, double epsilon);

// Block-diagonal A with blocks [[a, b], [-b, a]] (n/2 of them).
Tensor assemble_blocks(const Tensor& alpha, const Tensor& beta);
Tensor build_state_matrix(const JnfParams& p);

// max_k sqrt(alpha_k^2 + beta_k^2); exact for this block structure.
double spectral_radius_blocks(const Tensor& alpha, const Tensor& beta);
double spectral_radius(const JnfParams& p);

// O = [C; CA; ...; CA^{T-1}], (T*D) x n. Each block is the previous one
// right-multiplied by A; no explicit matrix powers.
Tensor observability_stack(const Tensor& a, const Tensor& c, int horizon);
Var observability_stack(Tape& t, Var a, Var c, int horizon);

// argmin_x ||O x - z||^2 + lambda ||x||^2 over the stacked embedding vector.
Tensor infer_initial_state(const Tensor& o, const Tensor& z, double lambda);

// y_t = C A^t x0 for t = 0..horizon-1, by repeated state multiplication.
std::vector<Tensor> rollout(const Tensor& a, const Tensor& c, const Tensor& x0, int horizon);

// Posterior mean of x0 given unit observation noise, zero process noise and
// an isotropic N(0, prior_cov I) prior, in information form solved by LU.
// Deliberately shares no factorization code with ridge_solve: it is the
// cross-check oracle for infer_initial_state (equal when lambda = 1/prior_cov).
Tensor smoother_oracle(const Tensor& a, const Tensor& c, const std::vector<Tensor>& frames,
                       double prior_cov = 1e8);

// rollout plus i.i.d. N(0, noise_std^2) perturbations from a seeded stream.
std::vector<Tensor> simulate_lti(const Tensor& a, const Tensor& c, const Tensor& x0, int horizon,
                                 double noise_std, std::uint64_t seed);

}  // namespace ile
