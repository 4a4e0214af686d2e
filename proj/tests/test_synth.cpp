#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ile/errors.hpp"
#include "ile/synth.hpp"

using namespace ile;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("ile_synth_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

SpriteConfig small_cfg() {
    SpriteConfig cfg;
    cfg.grid_h = 8;
    cfg.grid_w = 8;
    cfg.sprite_size = 2;
    cfg.speed_max = 3;
    cfg.seq_len = 12;
    cfg.jitter = 0.0;
    cfg.count = 10;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("axis stepping reflects elastically") {
    CHECK(step_axis(5, 2, 6) == std::pair<int, int>(5, -2));  // raw 7 -> 2*6-7
    CHECK(step_axis(3, 2, 6) == std::pair<int, int>(5, 2));
    CHECK(step_axis(1, -3, 6) == std::pair<int, int>(2, 3));  // raw -2 -> 2
    CHECK(step_axis(0, 0, 6) == std::pair<int, int>(0, 0));
    CHECK(step_axis(6, 1, 6) == std::pair<int, int>(5, -1));
    CHECK(step_axis(0, -1, 6) == std::pair<int, int>(1, 1));
}

TEST_CASE("trajectories stay in bounds with constant speed") {
    SpriteConfig cfg = small_cfg();
    cfg.seq_len = 40;
    for (std::uint64_t index = 0; index < 50; ++index) {
        const Trajectory tr = sample_trajectory(cfg, index);
        REQUIRE(tr.xs.size() == 40);
        REQUIRE(tr.bounce.size() == 40);
        CHECK_FALSE(tr.bounce[0]);
        CHECK_FALSE((tr.vx0 == 0 && tr.vy0 == 0));
        CHECK(std::abs(tr.vx0) <= cfg.speed_max);
        CHECK(std::abs(tr.vy0) <= cfg.speed_max);
        const int limx = cfg.grid_w - cfg.sprite_size;
        const int limy = cfg.grid_h - cfg.sprite_size;
        // replay the dynamics: reflections preserve |v| and stay in range
        int x = tr.xs[0], y = tr.ys[0], vx = tr.vx0, vy = tr.vy0;
        for (std::size_t t = 0; t < tr.xs.size(); ++t) {
            CHECK(tr.xs[t] >= 0);
            CHECK(tr.xs[t] <= limx);
            CHECK(tr.ys[t] >= 0);
            CHECK(tr.ys[t] <= limy);
            CHECK(tr.xs[t] == x);
            CHECK(tr.ys[t] == y);
            const int pvx = vx, pvy = vy;
            auto [nx, nvx] = step_axis(x, vx, limx);
            auto [ny, nvy] = step_axis(y, vy, limy);
            x = nx;
            vx = nvx;
            y = ny;
            vy = nvy;
            CHECK(std::abs(vx) == std::abs(tr.vx0));
            CHECK(std::abs(vy) == std::abs(tr.vy0));
            if (t + 1 < tr.bounce.size()) {
                const bool flipped = (vx != pvx) || (vy != pvy);
                CHECK(static_cast<bool>(tr.bounce[t + 1]) == flipped);
            }
        }
    }
}

TEST_CASE("rendering conserves sprite mass and brightness") {
    SpriteConfig cfg = small_cfg();
    for (std::uint64_t index = 0; index < 10; ++index) {
        const std::vector<Tensor> frames = generate_sequence(cfg, index);
        REQUIRE(frames.size() == 12);
        for (const Tensor& f : frames) {
            REQUIRE(f.numel() == 64);
            int ones = 0;
            for (std::int64_t i = 0; i < f.numel(); ++i) {
                CHECK((f[i] == 0.0 || f[i] == 1.0));  // jitter disabled
                if (f[i] == 1.0) ++ones;
            }
            CHECK(ones == cfg.sprite_size * cfg.sprite_size);
        }
    }
}

TEST_CASE("rendered sprite matches the sampled trajectory") {
    SpriteConfig cfg = small_cfg();
    const Trajectory tr = sample_trajectory(cfg, 3);
    const std::vector<Tensor> frames = render_trajectory(cfg, tr);
    for (int t = 0; t < cfg.seq_len; ++t)
        for (int r = 0; r < cfg.grid_h; ++r)
            for (int c = 0; c < cfg.grid_w; ++c) {
                const bool inside = r >= tr.ys[t] && r < tr.ys[t] + cfg.sprite_size &&
                                    c >= tr.xs[t] && c < tr.xs[t] + cfg.sprite_size;
                CHECK(frames[t][r * cfg.grid_w + c] == (inside ? 1.0 : 0.0));
            }
}

TEST_CASE("generation is a pure function of seed and index") {
    SpriteConfig cfg = small_cfg();
    cfg.jitter = 1.0 / 64;
    const auto a = generate_sequence(cfg, 5);
    const auto b = generate_sequence(cfg, 5);
    const auto c = generate_sequence(cfg, 6);
    REQUIRE(a.size() == b.size());
    bool differs = false;
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].bit_equal(b[t]));
        if (!a[t].bit_equal(c[t])) differs = true;
    }
    CHECK(differs);

    SpriteConfig other = cfg;
    other.seed = 8;
    CHECK_FALSE(generate_sequence(other, 5)[0].bit_equal(a[0]));
}

TEST_CASE("jitter brightens background pixels within its amplitude") {
    SpriteConfig cfg = small_cfg();
    cfg.jitter = 0.2;
    const Trajectory tr = sample_trajectory(cfg, 4);
    const std::vector<Tensor> clean = render_trajectory(cfg, tr);
    const std::vector<Tensor> noisy = generate_sequence(cfg, 4);
    bool any_nonzero_noise = false;
    for (std::size_t t = 0; t < noisy.size(); ++t)
        for (std::int64_t i = 0; i < noisy[t].numel(); ++i) {
            const double delta = noisy[t][i] - clean[t][i];
            if (clean[t][i] == 1.0) {
                CHECK(noisy[t][i] == 1.0);  // clamped back to 1
            } else {
                CHECK(delta >= 0.0);
                CHECK(delta < 0.2);
                if (delta > 0.0) any_nonzero_noise = true;
            }
            CHECK(noisy[t][i] >= 0.0);
            CHECK(noisy[t][i] <= 1.0);
        }
    CHECK(any_nonzero_noise);
}

TEST_CASE("container roundtrip is byte-identical") {
    SpriteConfig cfg = small_cfg();
    cfg.jitter = 1.0 / 64;
    std::vector<std::vector<Tensor>> seqs;
    for (std::uint64_t i = 0; i < 10; ++i) seqs.push_back(generate_sequence(cfg, i));

    const auto p1 = temp_file("round1.ilsq");
    const auto p2 = temp_file("round2.ilsq");
    write_sequences(p1.string(), seqs, cfg.seq_len, cfg.grid_h, cfg.grid_w);
    const Dataset ds = read_sequences(p1.string());
    CHECK(ds.grid_h == 8);
    CHECK(ds.grid_w == 8);
    CHECK(ds.seq_len() == 12);
    REQUIRE(ds.sequences.size() == 10);
    for (std::size_t s = 0; s < seqs.size(); ++s)
        for (std::size_t t = 0; t < seqs[s].size(); ++t)
            CHECK(ds.sequences[s][t].bit_equal(seqs[s][t]));

    write_sequences(p2.string(), ds.sequences, cfg.seq_len, ds.grid_h, ds.grid_w);
    CHECK(slurp(p1) == slurp(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("empty dataset is a header-only file") {
    const auto p = temp_file("empty.ilsq");
    write_sequences(p.string(), {}, 12, 8, 8);
    CHECK(std::filesystem::file_size(p) == 24);
    const Dataset ds = read_sequences(p.string());
    CHECK(ds.sequences.empty());
    CHECK(ds.grid_h == 8);
    std::filesystem::remove(p);
}

TEST_CASE("malformed containers are rejected") {
    SpriteConfig cfg = small_cfg();
    cfg.count = 2;
    std::vector<std::vector<Tensor>> seqs = {generate_sequence(cfg, 0), generate_sequence(cfg, 1)};
    const auto p = temp_file("corrupt.ilsq");
    write_sequences(p.string(), seqs, cfg.seq_len, cfg.grid_h, cfg.grid_w);
    std::string bytes = slurp(p);

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        std::ofstream(p, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_sequences(p.string()), FormatError);
    }
    SUBCASE("unsupported version") {
        bytes[4] = 9;
        std::ofstream(p, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_sequences(p.string()), FormatError);
    }
    SUBCASE("truncated payload") {
        bytes.resize(bytes.size() - 5);
        std::ofstream(p, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_sequences(p.string()), FormatError);
    }
    SUBCASE("trailing garbage") {
        bytes += "zzz";
        std::ofstream(p, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_sequences(p.string()), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_sequences((p.string() + ".does-not-exist")), IoError);
    }
    std::filesystem::remove(p);
}

TEST_CASE("config mapping and validation") {
    KeyValues kv;
    kv.set("grid.h", "8");
    kv.set("grid.w", "10");
    kv.set("sprite.size", "2");
    kv.set("seq.len", "12");
    kv.set("count", "5");
    kv.set("data.seed", "7");
    const SpriteConfig cfg = sprite_config_from(kv);
    CHECK(cfg.grid_w == 10);
    CHECK(cfg.speed_max == 3);          // default
    CHECK(cfg.jitter == 1.0 / 64);      // default
    CHECK(cfg.count == 5);
    CHECK(cfg.seed == 7);

    KeyValues missing;
    for (const auto& [key, value] : kv.entries())
        if (key != "count") missing.set(key, value);
    CHECK_THROWS_WITH_AS(sprite_config_from(missing), doctest::Contains("count"), ConfigError);

    auto expect_reject = [](void (*tweak)(SpriteConfig&)) {
        SpriteConfig c;
        tweak(c);
        CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    expect_reject([](SpriteConfig& c) { c.sprite_size = 8; });   // must be < min(H, W)
    expect_reject([](SpriteConfig& c) { c.sprite_size = 0; });
    expect_reject([](SpriteConfig& c) { c.speed_max = 0; });
    expect_reject([](SpriteConfig& c) { c.speed_max = 7; });     // > W - s
    expect_reject([](SpriteConfig& c) { c.jitter = 0.25; });
    expect_reject([](SpriteConfig& c) { c.jitter = -0.1; });
    expect_reject([](SpriteConfig& c) { c.seq_len = 0; });
    expect_reject([](SpriteConfig& c) { c.count = -1; });
    expect_reject([](SpriteConfig& c) { c.grid_h = 1; });
}
