#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ile/config.hpp"
#include "ile/flow.hpp"
#include "ile/lti.hpp"
#include "ile/tape.hpp"
#include "ile/tensor.hpp"

namespace ile {

// Model/training configuration. D = grid_h * grid_w is the flattened frame
// length; the latent state has state_dim entries (even, 2x2 blocks).
struct IleConfig {
    int grid_h = 8;
    int grid_w = 8;
    int flow_depth = 6;      // 0 = identity encoder (pure system id)
    int flow_hidden = 64;
    int state_dim = 0;       // 0 = default 2*D at validate()
    int seq_len = 12;        // T
    int cond_len = 4;        // k, prediction conditioning prefix
    double ridge_lambda = 1e-6;
    double gamma_floor = 1e-12;
    double gamma_exponent = 1.0;  // c in the -c*log(gamma) term
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int batch = 8;
    int steps = 1000;
    std::uint64_t seed = 1;

    int dim() const { return grid_h * grid_w; }
    // Fills defaults (state_dim) and throws ConfigError on any violated bound.
    void validate();
};

// Reads the model/training keys out of a flat key-value config (unrelated
// keys such as the generator's are ignored) and the canonical inverse used
// for checkpoint embedding. ile_config_from validates.
IleConfig ile_config_from(const KeyValues& kv);
KeyValues to_keyvalues(const IleConfig& cfg);

struct LossBreakdown {
    double predictive = 0.0;  // 0.5 * ||gamma^-1 (Z - Zhat)||^2
    double logdet_term = 0.0; // -sum_t log|det dz_t/do_t|
    double scale_term = 0.0;  // -c * log(gamma)
    double total = 0.0;
    double gamma = 0.0;
    double spectral_radius = 0.0;
};

struct IleModel {
    IleConfig cfg;
    FlowNetwork flow;
    JnfParams jnf;
    Tensor c_obs;  // D x n observation matrix

    static IleModel init(IleConfig cfg);

    // Stable parameter order shared by gradients, optimizer state and the
    // checkpoint: flow subnets first, then jnf.theta_alpha, jnf.theta_beta, obs.c.
    std::vector<std::string> parameter_names() const;
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
};

// Model parameters bound to one tape.
struct BoundModel {
    std::vector<TracedLayer> layers;
    std::vector<Var> params;  // parameter_names() order
    Var theta_alpha, theta_beta, c_obs;
};
BoundModel bind_model(Tape& t, const IleModel& m);

// gamma = max(mean |Z| over all entries, floor). Detached: a statistic of the
// data under the current encoder, never a gradient path.
double scale_gamma(const Tensor& z, double floor);

// Builds the full differentiable objective for one sequence on the given
// tape and reports the detached breakdown through `parts`.
Var sequence_loss(Tape& t, const IleModel& m, const BoundModel& b,
                  const std::vector<Tensor>& frames, LossBreakdown& parts);

// Evaluation-only wrapper (no backward pass).
LossBreakdown sequence_loss(const IleModel& m, const std::vector<Tensor>& frames);

struct AdamState {
    std::vector<Tensor> m1, m2;  // first/second moments, parameter order
    std::int64_t applied = 0;    // bias-correction step count

    static AdamState init(const IleModel& model);
};

struct StepResult {
    LossBreakdown mean;
    double grad_norm = 0.0;  // pre-clip global L2 norm
    bool rejected = false;   // non-finite value anywhere: state untouched
};

// One optimizer update from a batch of equal-length sequences: averaged
// gradients, global-norm clip at 10, bias-corrected adaptive moments
// (cfg.beta1/beta2, eps 1e-8). A rejected step leaves model and opt
// bit-identical.
StepResult train_step(IleModel& model, AdamState& opt,
                      const std::vector<std::vector<Tensor>>& batch);

// Encodes the conditioning prefix, infers x0 from those embeddings only,
// then decodes C A^t x0 for t = k..k+horizon-1. clamp maps pixels into [0,1];
// tests that compare against exact linear trajectories disable it.
std::vector<Tensor> predict_frames(const IleModel& m, const std::vector<Tensor>& conditioning,
                                   int horizon, bool clamp = true);

}  // namespace ile
