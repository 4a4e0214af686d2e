#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ile/checkpoint.hpp"
#include "ile/errors.hpp"
#include "ile/rng.hpp"

using namespace ile;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("ile_ckpt_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

// small model with one real optimizer step so the moments are nonzero
TrainingState trained_state() {
    IleConfig cfg;
    cfg.grid_h = 1;
    cfg.grid_w = 2;
    cfg.flow_depth = 2;
    cfg.flow_hidden = 3;
    cfg.state_dim = 2;
    cfg.seq_len = 2;
    cfg.cond_len = 1;
    cfg.seed = 5;
    TrainingState ts{IleModel::init(cfg), AdamState{}, 0};
    Rng rng(6);
    for (Tensor* p : ts.model.parameters())
        for (std::int64_t i = 0; i < p->numel(); ++i) (*p)[i] = 0.3 * rng.normal();
    ts.opt = AdamState::init(ts.model);
    const std::vector<std::vector<Tensor>> batch = {
        {Tensor({2}, {1.0, 0.0}), Tensor({2}, {0.0, -1.0})}};
    const StepResult r = train_step(ts.model, ts.opt, batch);
    REQUIRE_FALSE(r.rejected);
    ts.train_step = 7;
    return ts;
}

}  // namespace

TEST_CASE("raw container roundtrips bit-exactly") {
    CheckpointState st;
    st.config_text = "a = 1\nb = two\n";
    Rng rng(3);
    Tensor r2({3, 4});
    for (std::int64_t i = 0; i < r2.numel(); ++i) r2[i] = rng.normal();
    st.arrays.emplace_back("weights", r2);
    st.arrays.emplace_back("bias", Tensor({4}, {0.0, -0.0, 1e-300, 1.0 / 3.0}));
    st.arrays.emplace_back("counter", Tensor::scalar(42.0));

    const auto p1 = temp_file("raw1.ilec");
    const auto p2 = temp_file("raw2.ilec");
    save_checkpoint(p1.string(), st);
    const CheckpointState back = load_checkpoint(p1.string());
    CHECK(back.config_text == st.config_text);
    REQUIRE(back.arrays.size() == 3);
    for (std::size_t i = 0; i < st.arrays.size(); ++i) {
        CHECK(back.arrays[i].first == st.arrays[i].first);
        CHECK(back.arrays[i].second.bit_equal(st.arrays[i].second));
    }
    save_checkpoint(p2.string(), back);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(back.find("counter").scalar_value() == 42.0);
    CHECK_THROWS_AS(back.find("absent"), FormatError);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("snapshot -> restore -> snapshot is the identity") {
    const TrainingState ts = trained_state();
    const CheckpointState st = snapshot(ts.model, ts.opt, ts.train_step);
    const TrainingState back = restore(st);

    CHECK(back.train_step == 7);
    CHECK(back.opt.applied == ts.opt.applied);
    const auto pa = ts.model.parameters();
    const auto pb = back.model.parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->bit_equal(*pb[i]));
    for (std::size_t li = 0; li < ts.model.flow.layers().size(); ++li)
        CHECK(ts.model.flow.layers()[li].perm == back.model.flow.layers()[li].perm);
    for (std::size_t i = 0; i < ts.opt.m1.size(); ++i) {
        CHECK(ts.opt.m1[i].bit_equal(back.opt.m1[i]));
        CHECK(ts.opt.m2[i].bit_equal(back.opt.m2[i]));
    }

    const auto p1 = temp_file("snap1.ilec");
    const auto p2 = temp_file("snap2.ilec");
    save_checkpoint(p1.string(), st);
    save_checkpoint(p2.string(), snapshot(back.model, back.opt, back.train_step));
    CHECK(slurp(p1) == slurp(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("restore validates the array inventory") {
    const TrainingState ts = trained_state();
    const CheckpointState good = snapshot(ts.model, ts.opt, ts.train_step);

    SUBCASE("missing array") {
        CheckpointState st = good;
        st.arrays.pop_back();  // train.step
        CHECK_THROWS_WITH_AS(restore(st), doctest::Contains("missing"), FormatError);
    }
    SUBCASE("unexpected array") {
        CheckpointState st = good;
        st.arrays.emplace_back("stray", Tensor::scalar(1.0));
        CHECK_THROWS_WITH_AS(restore(st), doctest::Contains("unexpected"), FormatError);
    }
    SUBCASE("duplicate array") {
        CheckpointState st = good;
        st.arrays.push_back(st.arrays.front());
        CHECK_THROWS_WITH_AS(restore(st), doctest::Contains("duplicate"), FormatError);
    }
    SUBCASE("shape mismatch") {
        CheckpointState st = good;
        st.arrays[0].second = Tensor({1});
        CHECK_THROWS_AS(restore(st), FormatError);
    }
    SUBCASE("corrupt counters") {
        for (const char* name : {"opt.applied", "train.step"}) {
            CheckpointState st = good;
            for (auto& [n, t] : st.arrays)
                if (n == name) t = Tensor::scalar(-1.0);
            CHECK_THROWS_AS(restore(st), FormatError);
            for (auto& [n, t] : st.arrays)
                if (n == name) t = Tensor::scalar(1.5);
            CHECK_THROWS_AS(restore(st), FormatError);
        }
    }
    SUBCASE("broken permutation") {
        CheckpointState st = good;
        for (auto& [n, t] : st.arrays)
            if (n == "flow.layer1.perm") t[0] = t[1];  // duplicate index
        CHECK_THROWS_AS(restore(st), ConfigError);
        for (auto& [n, t] : st.arrays)
            if (n == "flow.layer1.perm") t[0] = 0.5;  // non-integer
        CHECK_THROWS_AS(restore(st), FormatError);
    }
    SUBCASE("unparseable embedded config") {
        CheckpointState st = good;
        st.config_text = "grid.h = 1\n";
        CHECK_THROWS_AS(restore(st), ConfigError);
    }
}

TEST_CASE("malformed checkpoint files are rejected") {
    const TrainingState ts = trained_state();
    const auto p = temp_file("bad.ilec");
    save_checkpoint(p.string(), snapshot(ts.model, ts.opt, ts.train_step));
    const std::string bytes = slurp(p);

    SUBCASE("bad magic") {
        std::string b = bytes;
        b[0] = 'Q';
        spit(p, b);
        CHECK_THROWS_AS(load_checkpoint(p.string()), FormatError);
    }
    SUBCASE("unsupported version") {
        std::string b = bytes;
        b[4] = 2;
        spit(p, b);
        CHECK_THROWS_AS(load_checkpoint(p.string()), FormatError);
    }
    SUBCASE("truncation anywhere is caught") {
        for (std::size_t cut : {bytes.size() - 1, bytes.size() - 9, bytes.size() / 2,
                                std::size_t{13}, std::size_t{6}}) {
            spit(p, bytes.substr(0, cut));
            CHECK_THROWS_AS(load_checkpoint(p.string()), FormatError);
        }
    }
    SUBCASE("trailing bytes") {
        spit(p, bytes + "x");
        CHECK_THROWS_AS(load_checkpoint(p.string()), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint(p.string() + ".nope"), IoError);
    }
    std::filesystem::remove(p);
}

TEST_CASE("restore rejects a checkpoint whose arrays disagree with its config") {
    // config says depth 2; hand the restore a depth-0 parameter inventory
    const TrainingState ts = trained_state();
    CheckpointState st = snapshot(ts.model, ts.opt, ts.train_step);
    IleConfig other = ts.model.cfg;
    other.flow_depth = 0;
    st.config_text = to_keyvalues(other).serialize();
    CHECK_THROWS_AS(restore(st), FormatError);
}
