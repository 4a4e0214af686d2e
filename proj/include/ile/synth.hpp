#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ile/config.hpp"
#include "ile/tensor.hpp"

namespace ile {

// Bouncing-sprite generator settings. A solid s x s square moves with a
// constant integer velocity and reflects elastically off the grid boundary.
struct SpriteConfig {
    int grid_h = 8;
    int grid_w = 8;
    int sprite_size = 2;
    int speed_max = 3;       // per-axis pixels/frame
    int seq_len = 12;
    double jitter = 1.0 / 64;  // additive uniform dequantization amplitude
    int count = 100;
    std::uint64_t seed = 7;

    void validate() const;
};

// Generator keys from a flat config: grid.h, grid.w, sprite.size, seq.len,
// count, data.seed required; speed.max and jitter defaulted. Validates.
SpriteConfig sprite_config_from(const KeyValues& kv);

// Top-left sprite positions per frame plus the sampled velocity. bounce[t]
// marks a reflection on either axis during the step into frame t (bounce[0]
// is always false).
struct Trajectory {
    std::vector<int> xs, ys;
    int vx0 = 0, vy0 = 0;
    std::vector<char> bounce;
};

// One axis step: pos += vel with elastic reflection into [0, limit].
// Exactly one reflection can occur because validate() bounds the speed.
std::pair<int, int> step_axis(int pos, int vel, int limit);

// Initial position and velocity are drawn from the (seed, index) stream;
// velocity is discrete uniform over {-max..max}^2 minus the joint zero.
Trajectory sample_trajectory(const SpriteConfig& cfg, std::uint64_t index);

// Jitter-free rendering: sprite pixels 1, background 0, row-major flatten.
std::vector<Tensor> render_trajectory(const SpriteConfig& cfg, const Trajectory& tr);

// Full generator: trajectory, rendering, then per-pixel uniform jitter in
// [0, amplitude) and a clamp back to [0,1]. Pure in (cfg.seed, index).
std::vector<Tensor> generate_sequence(const SpriteConfig& cfg, std::uint64_t index);

struct Dataset {
    int grid_h = 0;
    int grid_w = 0;
    std::vector<std::vector<Tensor>> sequences;

    int seq_len() const { return sequences.empty() ? 0 : static_cast<int>(sequences[0].size()); }
};

// Container layout (little-endian): "ILSQ", version u32 = 1, count u32,
// T u32, H u32, W u32, then count*T*H*W float64 in sequence/frame/row order.
void write_sequences(const std::string& path, const std::vector<std::vector<Tensor>>& sequences,
                     int seq_len, int grid_h, int grid_w);
Dataset read_sequences(const std::string& path);

}  // namespace ile
