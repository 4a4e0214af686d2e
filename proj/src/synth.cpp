#include "ile/synth.hpp"

#include <algorithm>
#include <fstream>

#include "ile/errors.hpp"
#include "ile/rng.hpp"
#include "ile/wire.hpp"

namespace ile {

void SpriteConfig::validate() const {
    if (grid_h < 2 || grid_w < 2) throw ConfigError("grid dims must be >= 2");
    if (sprite_size < 1 || sprite_size >= std::min(grid_h, grid_w))
        throw ConfigError("sprite.size must satisfy 1 <= s < min(H, W)");
    const int span = std::min(grid_w - sprite_size, grid_h - sprite_size);
    // speed <= span guarantees at most one reflection per axis per step
    if (speed_max < 1 || speed_max > span)
        throw ConfigError("speed.max must satisfy 1 <= speed <= min(W-s, H-s)");
    if (!(jitter >= 0.0) || jitter >= 0.25) throw ConfigError("jitter must lie in [0, 0.25)");
    if (seq_len < 1) throw ConfigError("seq.len must be >= 1");
    if (count < 0) throw ConfigError("count must be >= 0");
}

SpriteConfig sprite_config_from(const KeyValues& kv) {
    SpriteConfig cfg;
    cfg.grid_h = kv.get_int("grid.h");
    cfg.grid_w = kv.get_int("grid.w");
    cfg.sprite_size = kv.get_int("sprite.size");
    cfg.speed_max = kv.get_int_or("speed.max", 3);
    cfg.seq_len = kv.get_int("seq.len");
    cfg.jitter = kv.get_double_or("jitter", 1.0 / 64);
    cfg.count = kv.get_int("count");
    cfg.seed = kv.get_u64("data.seed");
    cfg.validate();
    return cfg;
}

std::pair<int, int> step_axis(int pos, int vel, int limit) {
    int p = pos + vel;
    int v = vel;
    if (p < 0) {
        p = -p;
        v = -v;
    } else if (p > limit) {
        p = 2 * limit - p;
        v = -v;
    }
    return {p, v};
}

namespace {

// Draw order is part of the format: x, y, then velocity pairs until one is
// nonzero. generate_sequence continues the same stream for jitter.
Trajectory sample_with(Rng& rng, const SpriteConfig& cfg) {
    const int lx = cfg.grid_w - cfg.sprite_size;
    const int ly = cfg.grid_h - cfg.sprite_size;
    Trajectory tr;
    int x = static_cast<int>(rng.uniform_int(0, lx));
    int y = static_cast<int>(rng.uniform_int(0, ly));
    int vx = 0, vy = 0;
    do {
        vx = static_cast<int>(rng.uniform_int(-cfg.speed_max, cfg.speed_max));
        vy = static_cast<int>(rng.uniform_int(-cfg.speed_max, cfg.speed_max));
    } while (vx == 0 && vy == 0);
    tr.vx0 = vx;
    tr.vy0 = vy;
    tr.bounce.assign(static_cast<std::size_t>(cfg.seq_len), 0);
    for (int t = 0; t < cfg.seq_len; ++t) {
        tr.xs.push_back(x);
        tr.ys.push_back(y);
        if (t + 1 < cfg.seq_len) {
            auto [nx, nvx] = step_axis(x, vx, lx);
            auto [ny, nvy] = step_axis(y, vy, ly);
            tr.bounce[static_cast<std::size_t>(t) + 1] = (nvx != vx || nvy != vy) ? 1 : 0;
            x = nx;
            y = ny;
            vx = nvx;
            vy = nvy;
        }
    }
    return tr;
}

}  // namespace

Trajectory sample_trajectory(const SpriteConfig& cfg, std::uint64_t index) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, index));
    return sample_with(rng, cfg);
}

std::vector<Tensor> render_trajectory(const SpriteConfig& cfg, const Trajectory& tr) {
    std::vector<Tensor> frames;
    frames.reserve(tr.xs.size());
    for (std::size_t t = 0; t < tr.xs.size(); ++t) {
        Tensor f({cfg.grid_h * cfg.grid_w});
        for (int dy = 0; dy < cfg.sprite_size; ++dy)
            for (int dx = 0; dx < cfg.sprite_size; ++dx)
                f[(tr.ys[t] + dy) * cfg.grid_w + tr.xs[t] + dx] = 1.0;
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<Tensor> generate_sequence(const SpriteConfig& cfg, std::uint64_t index) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, index));
    const Trajectory tr = sample_with(rng, cfg);
    std::vector<Tensor> frames = render_trajectory(cfg, tr);
    if (cfg.jitter > 0.0) {
        for (Tensor& f : frames)
            for (std::int64_t i = 0; i < f.numel(); ++i)
                f[i] = std::min(1.0, f[i] + rng.uniform(0.0, cfg.jitter));
    }
    return frames;
}

void write_sequences(const std::string& path, const std::vector<std::vector<Tensor>>& sequences,
                     int seq_len, int grid_h, int grid_w) {
    if (seq_len < 1 || grid_h < 1 || grid_w < 1) throw ConfigError("dataset dims must be positive");
    const std::int64_t d = static_cast<std::int64_t>(grid_h) * grid_w;
    for (const auto& seq : sequences) {
        if (static_cast<int>(seq.size()) != seq_len) throw DimensionError("dataset requires uniform sequence length");
        for (const Tensor& f : seq)
            if (f.numel() != d) throw DimensionError("frame length must equal H*W");
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    wire::put_bytes(os, "ILSQ", 4);
    wire::put_u32(os, 1);
    wire::put_u32(os, static_cast<std::uint32_t>(sequences.size()));
    wire::put_u32(os, static_cast<std::uint32_t>(seq_len));
    wire::put_u32(os, static_cast<std::uint32_t>(grid_h));
    wire::put_u32(os, static_cast<std::uint32_t>(grid_w));
    for (const auto& seq : sequences)
        for (const Tensor& f : seq)
            for (std::int64_t i = 0; i < f.numel(); ++i) wire::put_f64(os, f[i]);
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

Dataset read_sequences(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    const std::string magic = wire::get_bytes(is, 4, "magic");
    if (magic != "ILSQ") throw FormatError("bad magic (expected ILSQ): " + path);
    const std::uint32_t version = wire::get_u32(is, "version");
    if (version != 1) throw FormatError("unsupported dataset version " + std::to_string(version));
    const std::uint32_t count = wire::get_u32(is, "count");
    const std::uint32_t seq_len = wire::get_u32(is, "seq_len");
    const std::uint32_t grid_h = wire::get_u32(is, "grid_h");
    const std::uint32_t grid_w = wire::get_u32(is, "grid_w");
    if (count > 0 && (seq_len < 1 || grid_h < 1 || grid_w < 1)) throw FormatError("degenerate dataset dims");
    Dataset ds;
    ds.grid_h = static_cast<int>(grid_h);
    ds.grid_w = static_cast<int>(grid_w);
    const int d = static_cast<int>(grid_h * grid_w);
    ds.sequences.reserve(count);
    for (std::uint32_t s = 0; s < count; ++s) {
        std::vector<Tensor> seq;
        seq.reserve(seq_len);
        for (std::uint32_t t = 0; t < seq_len; ++t) {
            Tensor f({d});
            for (int i = 0; i < d; ++i) f[i] = wire::get_f64(is, "frame payload");
            seq.push_back(std::move(f));
        }
        ds.sequences.push_back(std::move(seq));
    }
    is.peek();
    if (!is.eof()) throw FormatError("trailing bytes after dataset payload: " + path);
    return ds;
}

}  // namespace ile
