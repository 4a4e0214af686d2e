#include "ile/model.hpp"

#include <cmath>
#include <cstdio>

#include "ile/errors.hpp"
#include "ile/linalg.hpp"
#include "ile/rng.hpp"

namespace ile {

void IleConfig::validate() {
    if (grid_h < 1 || grid_w < 1) throw ConfigError("grid dims must be >= 1");
    if (dim() < 2) throw ConfigError("frame length H*W must be >= 2");
    if (flow_depth < 0) throw ConfigError("flow.depth must be >= 0");
    if (flow_depth > 0 && flow_hidden < 1) throw ConfigError("flow.hidden must be >= 1");
    if (state_dim == 0) state_dim = 2 * dim();
    if (state_dim < 2 || state_dim % 2 != 0) throw ConfigError("state.dim must be a positive even number");
    if (cond_len < 1) throw ConfigError("cond.len must be >= 1");
    if (seq_len <= cond_len) throw ConfigError("seq.len must exceed cond.len");
    if (state_dim > seq_len * dim()) throw ConfigError("state.dim must be <= T*D for identifiability");
    if (!(ridge_lambda > 0.0)) throw ConfigError("ridge.lambda must be positive");
    if (!(gamma_floor > 0.0)) throw ConfigError("gamma.floor must be positive");
    if (!(gamma_exponent > 0.0)) throw ConfigError("gamma.exponent must be positive");
    if (!(lr > 0.0)) throw ConfigError("opt.lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("moment decays must lie in [0, 1)");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (steps < 0) throw ConfigError("steps must be >= 0");
}

IleConfig ile_config_from(const KeyValues& kv) {
    IleConfig cfg;
    cfg.grid_h = kv.get_int("grid.h");
    cfg.grid_w = kv.get_int("grid.w");
    cfg.flow_depth = kv.get_int("flow.depth");
    cfg.flow_hidden = kv.get_int("flow.hidden");
    cfg.state_dim = kv.get_int_or("state.dim", 0);
    cfg.seq_len = kv.get_int("seq.len");
    cfg.cond_len = kv.get_int("cond.len");
    cfg.ridge_lambda = kv.get_double_or("ridge.lambda", 1e-6);
    cfg.gamma_floor = kv.get_double_or("gamma.floor", 1e-12);
    cfg.gamma_exponent = kv.get_double_or("gamma.exponent", 1.0);
    cfg.lr = kv.get_double_or("opt.lr", 1e-3);
    cfg.beta1 = kv.get_double_or("opt.beta1", 0.9);
    cfg.beta2 = kv.get_double_or("opt.beta2", 0.999);
    cfg.batch = kv.get_int_or("batch", 8);
    cfg.steps = kv.get_int_or("steps", 1000);
    cfg.seed = kv.get_u64("seed");
    cfg.validate();
    return cfg;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

KeyValues to_keyvalues(const IleConfig& cfg) {
    KeyValues kv;
    kv.set("grid.h", std::to_string(cfg.grid_h));
    kv.set("grid.w", std::to_string(cfg.grid_w));
    kv.set("flow.depth", std::to_string(cfg.flow_depth));
    kv.set("flow.hidden", std::to_string(cfg.flow_hidden));
    kv.set("state.dim", std::to_string(cfg.state_dim));
    kv.set("seq.len", std::to_string(cfg.seq_len));
    kv.set("cond.len", std::to_string(cfg.cond_len));
    kv.set("ridge.lambda", fmt_double(cfg.ridge_lambda));
    kv.set("gamma.floor", fmt_double(cfg.gamma_floor));
    kv.set("gamma.exponent", fmt_double(cfg.gamma_exponent));
    kv.set("opt.lr", fmt_double(cfg.lr));
    kv.set("opt.beta1", fmt_double(cfg.beta1));
    kv.set("opt.beta2", fmt_double(cfg.beta2));
    kv.set("batch", std::to_string(cfg.batch));
    kv.set("steps", std::to_string(cfg.steps));
    kv.set("seed", std::to_string(cfg.seed));
    return kv;
}

IleModel IleModel::init(IleConfig cfg) {
    cfg.validate();
    IleModel m;
    m.cfg = cfg;
    m.flow = FlowNetwork::init(cfg.dim(), cfg.flow_depth, cfg.flow_hidden, mix_seed(cfg.seed, 1));
    const int half = cfg.state_dim / 2;
    m.jnf.theta_alpha = Tensor({half});
    m.jnf.theta_beta = Tensor({half});
    Rng rng(mix_seed(cfg.seed, 2));
    // alpha lands in [0.85, 1-eps), beta small: near-identity latents that
    // rotate slowly, so early rollouts neither explode nor collapse.
    for (int k = 0; k < half; ++k) {
        m.jnf.theta_alpha[k] = rng.uniform(0.0, 0.15);
        m.jnf.theta_beta[k] = rng.uniform(0.9, 1.0);
    }
    m.c_obs = Tensor({cfg.dim(), cfg.state_dim});
    const double std_c = 0.1 / std::sqrt(static_cast<double>(cfg.state_dim));
    for (std::int64_t i = 0; i < m.c_obs.numel(); ++i) m.c_obs[i] = std_c * rng.normal();
    return m;
}

std::vector<std::string> IleModel::parameter_names() const {
    std::vector<std::string> names = flow.parameter_names();
    names.push_back("jnf.theta_alpha");
    names.push_back("jnf.theta_beta");
    names.push_back("obs.c");
    return names;
}

std::vector<Tensor*> IleModel::parameters() {
    std::vector<Tensor*> out = flow.parameters();
    out.push_back(&jnf.theta_alpha);
    out.push_back(&jnf.theta_beta);
    out.push_back(&c_obs);
    return out;
}

std::vector<const Tensor*> IleModel::parameters() const {
    std::vector<const Tensor*> out = flow.parameters();
    out.push_back(&jnf.theta_alpha);
    out.push_back(&jnf.theta_beta);
    out.push_back(&c_obs);
    return out;
}

BoundModel bind_model(Tape& t, const IleModel& m) {
    BoundModel b;
    b.params = m.flow.bind(t, b.layers);
    b.theta_alpha = t.leaf(m.jnf.theta_alpha);
    b.theta_beta = t.leaf(m.jnf.theta_beta);
    b.c_obs = t.leaf(m.c_obs);
    b.params.insert(b.params.end(), {b.theta_alpha, b.theta_beta, b.c_obs});
    return b;
}

double scale_gamma(const Tensor& z, double floor) {
    if (!(floor > 0.0)) throw ConfigError("gamma floor must be positive");
    return std::max(mean_abs(z), floor);
}

Var sequence_loss(Tape& t, const IleModel& m, const BoundModel& b,
                  const std::vector<Tensor>& frames, LossBreakdown& parts) {
    const int horizon = static_cast<int>(frames.size());
    if (horizon < 1) throw DimensionError("sequence_loss: empty sequence");
    std::vector<Var> zs;
    zs.reserve(frames.size());
    Var logdet_sum = t.leaf(Tensor::scalar(0.0));
    for (const Tensor& o : frames) {
        auto [z, ld] = m.flow.encode(t, b.layers, t.leaf(o));
        zs.push_back(z);
        logdet_sum = t.add(logdet_sum, ld);
    }
    const Var z_stack = t.concat(zs);
    auto [alpha, beta] = jnf_map(t, b.theta_alpha, b.theta_beta, m.jnf.epsilon);
    const Var a = t.assemble_jnf(alpha, beta);
    const Var obs = observability_stack(t, a, b.c_obs, horizon);
    const Var x0 = t.ridge_solve(obs, z_stack, m.cfg.ridge_lambda);
    const Var z_hat = t.matmul(obs, x0);

    const double gamma = scale_gamma(t.value(z_stack), m.cfg.gamma_floor);
    const Var resid = t.axpb(t.sub(z_stack, z_hat), 1.0 / gamma, 0.0);
    const Var predictive = t.axpb(t.sum(t.mul(resid, resid)), 0.5, 0.0);
    const Var logdet_term = t.axpb(logdet_sum, -1.0, 0.0);
    const double scale_term = -m.cfg.gamma_exponent * std::log(gamma);
    const Var total = t.add(t.add(predictive, logdet_term), t.leaf(Tensor::scalar(scale_term)));

    parts.predictive = t.value(predictive).scalar_value();
    parts.logdet_term = t.value(logdet_term).scalar_value();
    parts.scale_term = scale_term;
    parts.total = t.value(total).scalar_value();
    parts.gamma = gamma;
    parts.spectral_radius = spectral_radius_blocks(t.value(alpha), t.value(beta));
    return total;
}

LossBreakdown sequence_loss(const IleModel& m, const std::vector<Tensor>& frames) {
    Tape t;
    const BoundModel b = bind_model(t, m);
    LossBreakdown parts;
    sequence_loss(t, m, b, frames, parts);
    return parts;
}

AdamState AdamState::init(const IleModel& model) {
    AdamState s;
    for (const Tensor* p : model.parameters()) {
        s.m1.emplace_back(p->shape());
        s.m2.emplace_back(p->shape());
    }
    return s;
}

StepResult train_step(IleModel& model, AdamState& opt,
                      const std::vector<std::vector<Tensor>>& batch) {
    if (batch.empty()) throw ConfigError("train_step: empty batch");
    for (const std::vector<Tensor>& frames : batch)
        if (frames.size() != batch.front().size())
            throw DimensionError("train_step: sequences in a batch must share one length");
    StepResult res;
    std::vector<Tensor*> params = model.parameters();
    if (opt.m1.size() != params.size()) throw DimensionError("optimizer state does not match the model");

    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const Tensor* p : params) grads.emplace_back(p->shape());

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    // Everything up to the parameter update works on locals, so any numeric
    // failure rejects the step with model and opt bit-identical.
    try {
        for (const std::vector<Tensor>& frames : batch) {
            Tape t;
            const BoundModel b = bind_model(t, model);
            LossBreakdown parts;
            const Var total = sequence_loss(t, model, b, frames, parts);
            t.backward(total);
            for (std::size_t i = 0; i < params.size(); ++i) {
                const Tensor g = t.grad(b.params[i]);
                for (std::int64_t j = 0; j < g.numel(); ++j) grads[i][j] += inv_b * g[j];
            }
            res.mean.predictive += inv_b * parts.predictive;
            res.mean.logdet_term += inv_b * parts.logdet_term;
            res.mean.scale_term += inv_b * parts.scale_term;
            res.mean.total += inv_b * parts.total;
            res.mean.gamma += inv_b * parts.gamma;
            res.mean.spectral_radius = parts.spectral_radius;  // same parameters all batch
        }
    } catch (const NumericError&) {
        res.rejected = true;
        return res;
    } catch (const SingularityError&) {
        res.rejected = true;
        return res;
    }

    double sq = 0.0;
    for (const Tensor& g : grads)
        for (std::int64_t j = 0; j < g.numel(); ++j) sq += g[j] * g[j];
    res.grad_norm = std::sqrt(sq);
    const double clip = 10.0;
    const double scale = res.grad_norm > clip ? clip / res.grad_norm : 1.0;

    opt.applied += 1;
    const double b1 = model.cfg.beta1, b2 = model.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.applied));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.applied));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        for (std::int64_t j = 0; j < p.numel(); ++j) {
            const double g = scale * grads[i][j];
            opt.m1[i][j] = b1 * opt.m1[i][j] + (1.0 - b1) * g;
            opt.m2[i][j] = b2 * opt.m2[i][j] + (1.0 - b2) * g * g;
            const double mh = opt.m1[i][j] / c1;
            const double vh = opt.m2[i][j] / c2;
            p[j] -= model.cfg.lr * mh / (std::sqrt(vh) + 1e-8);
        }
        check_finite(p, "updated parameter");
    }
    return res;
}

std::vector<Tensor> predict_frames(const IleModel& m, const std::vector<Tensor>& conditioning,
                                   int horizon, bool clamp) {
    const int k = static_cast<int>(conditioning.size());
    if (k < 1) throw ConfigError("prediction needs at least one conditioning frame");
    if (horizon < 1) throw ConfigError("prediction horizon must be >= 1");
    const int d = m.cfg.dim();
    std::vector<Tensor> z_cond;
    z_cond.reserve(conditioning.size());
    for (const Tensor& o : conditioning) {
        if (o.rank() != 1 || o.shape()[0] != d) throw DimensionError("conditioning frame length mismatch");
        z_cond.push_back(m.flow.encode(o).first);
    }
    Tensor z_stack({k * d});
    for (int t = 0; t < k; ++t)
        for (int i = 0; i < d; ++i) z_stack[t * d + i] = z_cond[t][i];

    const Tensor a = build_state_matrix(m.jnf);
    const Tensor obs = observability_stack(a, m.c_obs, k);
    Tensor x = infer_initial_state(obs, z_stack, m.cfg.ridge_lambda);
    for (int t = 0; t < k; ++t) x = matmul(a, x);  // advance to state k

    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        Tensor frame = m.flow.decode(matmul(m.c_obs, x));
        if (clamp)
            for (std::int64_t i = 0; i < frame.numel(); ++i)
                frame[i] = std::min(1.0, std::max(0.0, frame[i]));
        out.push_back(std::move(frame));
        if (t + 1 < horizon) x = matmul(a, x);
    }
    return out;
}

}  // namespace ile
