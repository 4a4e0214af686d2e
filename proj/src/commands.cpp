#include "ile/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ile/checkpoint.hpp"
#include "ile/config.hpp"
#include "ile/errors.hpp"
#include "ile/metrics.hpp"
#include "ile/model.hpp"
#include "ile/rng.hpp"
#include "ile/synth.hpp"

namespace ile {

namespace {

// Flat shared namespace: one config file drives generation and training.
const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "grid.h",     "grid.w",       "sprite.size",    "speed.max",  "seq.len",
        "cond.len",   "flow.depth",   "flow.hidden",    "state.dim",  "ridge.lambda",
        "gamma.floor", "gamma.exponent", "opt.lr",      "opt.beta1",  "opt.beta2",
        "batch",      "steps",        "seed",           "jitter",     "count",
        "data.seed",
    };
    return keys;
}

KeyValues load_config(const std::string& path) {
    KeyValues kv = KeyValues::parse_file(path);
    kv.require_known(known_config_keys());
    return kv;
}

void check_dataset_dims(const Dataset& ds, const IleConfig& cfg) {
    if (ds.sequences.empty()) throw ConfigError("dataset is empty");
    if (ds.grid_h != cfg.grid_h || ds.grid_w != cfg.grid_w)
        throw ConfigError("dataset grid dims do not match the configuration");
}

// Per-step batch indices come from a stream keyed by (seed, step), so a
// resumed run samples exactly what the uninterrupted run would have.
std::vector<std::size_t> batch_indices(std::uint64_t seed, std::int64_t step, int batch,
                                       std::size_t count) {
    Rng rng(mix_seed(mix_seed(seed, 0xBA7C4), static_cast<std::uint64_t>(step)));
    std::vector<std::size_t> idx;
    idx.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i)
        idx.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(count) - 1)));
    return idx;
}

TrainingState load_model_for_inference(const std::string& ckpt_path, const std::string& config_path) {
    const CheckpointState st = load_checkpoint(ckpt_path);
    if (!config_path.empty()) {
        const IleConfig file_cfg = ile_config_from(load_config(config_path));
        if (to_keyvalues(file_cfg).serialize() != st.config_text)
            std::cerr << "warning: checkpoint config differs from --config; using the checkpoint's\n";
    }
    return restore(st);
}

void print_breakdown(const char* label, const LossBreakdown& b) {
    std::printf("%s total=%.6g predictive=%.6g logdet=%.6g scale=%.6g gamma=%.6g rho=%.6g\n", label,
                b.total, b.predictive, b.logdet_term, b.scale_term, b.gamma, b.spectral_radius);
}

}  // namespace

void cmd_generate(const GenerateArgs& args) {
    const KeyValues kv = load_config(args.config_path);
    const SpriteConfig cfg = sprite_config_from(kv);
    std::vector<std::vector<Tensor>> sequences;
    sequences.reserve(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i)
        sequences.push_back(generate_sequence(cfg, static_cast<std::uint64_t>(i)));
    write_sequences(args.out_path, sequences, cfg.seq_len, cfg.grid_h, cfg.grid_w);
    std::printf("wrote %d sequences (T=%d, %dx%d) to %s\n", cfg.count, cfg.seq_len, cfg.grid_h,
                cfg.grid_w, args.out_path.c_str());
}

void cmd_train(const TrainArgs& args) {
    IleConfig cfg = ile_config_from(load_config(args.config_path));
    TrainingState ts{IleModel{}, AdamState{}, 0};
    if (!args.ckpt_in.empty()) {
        const CheckpointState st = load_checkpoint(args.ckpt_in);
        if (to_keyvalues(cfg).serialize() != st.config_text)
            std::cerr << "warning: checkpoint config differs from --config; using the checkpoint's\n";
        ts = restore(st);
        cfg = ts.model.cfg;
    } else {
        ts.model = IleModel::init(cfg);
        cfg = ts.model.cfg;  // validate() fills defaults such as state.dim
        ts.opt = AdamState::init(ts.model);
    }
    const int steps = args.steps_override >= 0 ? args.steps_override : cfg.steps;

    const Dataset ds = read_sequences(args.data_path);
    check_dataset_dims(ds, cfg);
    if (ds.seq_len() != cfg.seq_len) throw ConfigError("dataset seq.len does not match the configuration");

    const std::string trace_path = args.trace_path.empty() ? args.ckpt_out + ".trace.csv" : args.trace_path;
    std::ofstream trace(trace_path, std::ios::trunc);
    if (!trace) throw IoError("cannot open for writing: " + trace_path);

    LossBreakdown last;
    bool have_last = false;
    int consecutive_rejects = 0;
    for (int s = 0; s < steps; ++s) {
        const std::int64_t step = ts.train_step;
        std::vector<std::vector<Tensor>> batch;
        for (std::size_t idx : batch_indices(cfg.seed, step, cfg.batch, ds.sequences.size()))
            batch.push_back(ds.sequences[idx]);
        const StepResult res = train_step(ts.model, ts.opt, batch);
        ts.train_step = step + 1;
        if (res.rejected) {
            ++consecutive_rejects;
            std::cerr << "warning: step " << step << " rejected (non-finite value)\n";
            if (consecutive_rejects >= 10)
                throw NumericError("training aborted: 10 consecutive rejected steps");
            continue;
        }
        consecutive_rejects = 0;
        last = res.mean;
        have_last = true;
        char line[512];
        std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(step), res.mean.predictive, res.mean.logdet_term,
                      res.mean.scale_term, res.mean.total, res.mean.gamma, res.mean.spectral_radius);
        trace << line;
    }
    trace.flush();
    if (!trace) throw IoError("write failed: " + trace_path);

    save_checkpoint(args.ckpt_out, snapshot(ts.model, ts.opt, ts.train_step));
    std::printf("checkpoint written to %s (trace: %s)\n", args.ckpt_out.c_str(), trace_path.c_str());
    if (have_last) print_breakdown("final", last);
}

void write_pgm(const std::string& path, const Tensor& frame, int grid_h, int grid_w) {
    if (frame.numel() != static_cast<std::int64_t>(grid_h) * grid_w)
        throw DimensionError("write_pgm: frame length must equal H*W");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "P5\n" << grid_w << " " << grid_h << "\n255\n";
    for (std::int64_t i = 0; i < frame.numel(); ++i) {
        const double v = std::min(1.0, std::max(0.0, frame[i]));
        const unsigned char q = static_cast<unsigned char>(std::lround(v * 255.0));
        os.write(reinterpret_cast<const char*>(&q), 1);
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

namespace {

std::pair<int, int> resolve_window(const IleConfig& cfg, const Dataset& ds, int k_arg, int m_arg) {
    const int k = k_arg > 0 ? k_arg : cfg.cond_len;
    const int m = m_arg > 0 ? m_arg : ds.seq_len() - k;
    if (k < 1 || m < 1) throw ConfigError("k and horizon must be >= 1");
    if (k + m > ds.seq_len()) throw ConfigError("k + horizon exceeds the dataset sequence length");
    return {k, m};
}

}  // namespace

void cmd_predict(const PredictArgs& args) {
    const TrainingState ts = load_model_for_inference(args.ckpt_path, args.config_path);
    const Dataset ds = read_sequences(args.data_path);
    check_dataset_dims(ds, ts.model.cfg);
    const auto [k, m] = resolve_window(ts.model.cfg, ds, args.k, args.horizon);

    std::filesystem::create_directories(args.out_dir);
    int files = 0;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        const std::vector<Tensor>& seq = ds.sequences[i];
        const std::vector<Tensor> cond(seq.begin(), seq.begin() + k);
        const std::vector<Tensor> preds = predict_frames(ts.model, cond, m);
        for (int t = 0; t < m; ++t) {
            const int abs_t = k + t;
            const std::string base =
                args.out_dir + "/seq" + std::to_string(i) + "_t" + std::to_string(abs_t);
            write_pgm(base + "_pred.pgm", preds[static_cast<std::size_t>(t)], ds.grid_h, ds.grid_w);
            write_pgm(base + "_true.pgm", seq[static_cast<std::size_t>(abs_t)], ds.grid_h, ds.grid_w);
            files += 2;
        }
    }
    std::printf("wrote %d frames to %s\n", files, args.out_dir.c_str());
}

void cmd_eval(const EvalArgs& args) {
    const TrainingState ts = load_model_for_inference(args.ckpt_path, args.config_path);
    const Dataset ds = read_sequences(args.data_path);
    check_dataset_dims(ds, ts.model.cfg);
    const auto [k, m] = resolve_window(ts.model.cfg, ds, args.k, args.horizon);

    const EvalReport report = evaluate(ts.model, ds.sequences, k, m);
    write_report(args.report_path, report);
    const EvalRow& first = report.rows.front();
    const EvalRow& last = report.rows.back();
    std::printf("report written to %s (%d sequences)\n", args.report_path.c_str(),
                report.sequence_count);
    std::printf("horizon %d: model %.4f dB / %.4f ssim, baseline %.4f dB / %.4f ssim\n",
                first.horizon, first.model_psnr, first.model_ssim, first.baseline_psnr,
                first.baseline_ssim);
    std::printf("horizon %d: model %.4f dB / %.4f ssim, baseline %.4f dB / %.4f ssim\n",
                last.horizon, last.model_psnr, last.model_ssim, last.baseline_psnr,
                last.baseline_ssim);
}

}  // namespace ile
