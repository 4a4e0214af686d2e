#include "ile/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "ile/config.hpp"
#include "ile/errors.hpp"
#include "ile/wire.hpp"

namespace ile {

const Tensor& CheckpointState::find(const std::string& name) const {
    for (const auto& [n, t] : arrays)
        if (n == name) return t;
    throw FormatError("checkpoint array missing: " + name);
}

void save_checkpoint(const std::string& path, const CheckpointState& st) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    wire::put_bytes(os, "ILEC", 4);
    wire::put_u32(os, 1);
    wire::put_u32(os, static_cast<std::uint32_t>(st.config_text.size()));
    wire::put_bytes(os, st.config_text.data(), st.config_text.size());
    wire::put_u32(os, static_cast<std::uint32_t>(st.arrays.size()));
    for (const auto& [name, t] : st.arrays) {
        wire::put_u32(os, static_cast<std::uint32_t>(name.size()));
        wire::put_bytes(os, name.data(), name.size());
        wire::put_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (int d : t.shape()) wire::put_u32(os, static_cast<std::uint32_t>(d));
        for (std::int64_t i = 0; i < t.numel(); ++i) wire::put_f64(os, t[i]);
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

CheckpointState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    if (wire::get_bytes(is, 4, "magic") != "ILEC") throw FormatError("bad magic (expected ILEC): " + path);
    const std::uint32_t version = wire::get_u32(is, "version");
    if (version != 1) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    CheckpointState st;
    const std::uint32_t cfg_len = wire::get_u32(is, "config length");
    if (cfg_len > (1u << 20)) throw FormatError("config block implausibly large");
    st.config_text = wire::get_bytes(is, cfg_len, "config block");
    const std::uint32_t count = wire::get_u32(is, "array count");
    if (count > (1u << 20)) throw FormatError("array count implausibly large");
    for (std::uint32_t a = 0; a < count; ++a) {
        const std::uint32_t name_len = wire::get_u32(is, "array name length");
        if (name_len == 0 || name_len > 4096) throw FormatError("bad array name length");
        const std::string name = wire::get_bytes(is, name_len, "array name");
        const std::uint32_t rank = wire::get_u32(is, "array rank");
        if (rank > 8) throw FormatError("array rank implausibly large: " + name);
        std::vector<int> shape;
        std::int64_t numel = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const std::uint32_t d = wire::get_u32(is, "array dim");
            if (d > (1u << 24)) throw FormatError("array dim implausibly large: " + name);
            shape.push_back(static_cast<int>(d));
            numel *= d;
        }
        if (numel > (std::int64_t{1} << 28)) throw FormatError("array payload implausibly large: " + name);
        Tensor t(shape);
        for (std::int64_t i = 0; i < numel; ++i) t[i] = wire::get_f64(is, "array payload");
        st.arrays.emplace_back(name, std::move(t));
    }
    is.peek();
    if (!is.eof()) throw FormatError("trailing bytes after checkpoint payload: " + path);
    return st;
}

namespace {

Tensor counter_tensor(std::int64_t v) {
    // step counters stay exact in float64 far beyond any feasible run length
    return Tensor::scalar(static_cast<double>(v));
}

std::int64_t counter_value(const Tensor& t, const char* what) {
    if (t.rank() != 0) throw FormatError(std::string("counter must be rank-0: ") + what);
    const double v = t[0];
    if (!(v >= 0.0) || v != std::floor(v)) throw FormatError(std::string("corrupt counter: ") + what);
    return static_cast<std::int64_t>(v);
}

}  // namespace

CheckpointState snapshot(const IleModel& model, const AdamState& opt, std::int64_t train_step) {
    CheckpointState st;
    st.config_text = to_keyvalues(model.cfg).serialize();
    const std::vector<std::string> names = model.parameter_names();
    const std::vector<const Tensor*> params = model.parameters();
    for (std::size_t i = 0; i < names.size(); ++i) st.arrays.emplace_back(names[i], *params[i]);
    const auto& layers = model.flow.layers();
    for (std::size_t li = 0; li < layers.size(); ++li) {
        Tensor p({static_cast<int>(layers[li].perm.size())});
        for (std::size_t i = 0; i < layers[li].perm.size(); ++i)
            p[static_cast<std::int64_t>(i)] = static_cast<double>(layers[li].perm[i]);
        st.arrays.emplace_back("flow.layer" + std::to_string(li) + ".perm", std::move(p));
    }
    if (opt.m1.size() != names.size()) throw DimensionError("optimizer state does not match the model");
    for (std::size_t i = 0; i < names.size(); ++i) st.arrays.emplace_back("opt.m1." + names[i], opt.m1[i]);
    for (std::size_t i = 0; i < names.size(); ++i) st.arrays.emplace_back("opt.m2." + names[i], opt.m2[i]);
    st.arrays.emplace_back("opt.applied", counter_tensor(opt.applied));
    st.arrays.emplace_back("train.step", counter_tensor(train_step));
    return st;
}

TrainingState restore(const CheckpointState& st) {
    const IleConfig cfg = ile_config_from(KeyValues::parse_text(st.config_text));
    TrainingState ts{IleModel::init(cfg), AdamState{}, 0};
    IleModel& m = ts.model;

    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : st.arrays) {
        if (by_name.count(name)) throw FormatError("duplicate checkpoint array: " + name);
        by_name[name] = &t;
    }
    auto take = [&by_name](const std::string& name) -> const Tensor& {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw FormatError("checkpoint array missing: " + name);
        const Tensor* t = it->second;
        by_name.erase(it);
        return *t;
    };
    auto assign = [&take](Tensor& dst, const std::string& name) {
        const Tensor& src = take(name);
        if (!dst.same_shape(src))
            throw FormatError("checkpoint array " + name + " has shape " + src.shape_str() +
                              ", model expects " + dst.shape_str());
        dst = src;
    };

    const std::vector<std::string> names = m.parameter_names();
    std::vector<Tensor*> params = m.parameters();
    for (std::size_t i = 0; i < names.size(); ++i) assign(*params[i], names[i]);

    auto& layers = m.flow.layers();
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const Tensor& p = take("flow.layer" + std::to_string(li) + ".perm");
        if (p.rank() != 1 || p.shape()[0] != m.cfg.dim()) throw FormatError("bad permutation array shape");
        std::vector<int> perm(p.numel());
        for (std::int64_t i = 0; i < p.numel(); ++i) {
            if (p[i] != std::floor(p[i])) throw FormatError("non-integer permutation entry");
            perm[static_cast<std::size_t>(i)] = static_cast<int>(p[i]);
        }
        layers[li].set_perm(std::move(perm));
    }

    ts.opt = AdamState::init(m);
    for (std::size_t i = 0; i < names.size(); ++i) assign(ts.opt.m1[i], "opt.m1." + names[i]);
    for (std::size_t i = 0; i < names.size(); ++i) assign(ts.opt.m2[i], "opt.m2." + names[i]);
    ts.opt.applied = counter_value(take("opt.applied"), "opt.applied");
    ts.train_step = counter_value(take("train.step"), "train.step");

    if (!by_name.empty()) throw FormatError("unexpected checkpoint array: " + by_name.begin()->first);
    return ts;
}

}  // namespace ile
