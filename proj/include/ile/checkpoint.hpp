#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ile/model.hpp"
#include "ile/tensor.hpp"

namespace ile {

// On-disk training state. Layout (little-endian): magic "ILEC", version
// u32 = 1, config text (u32 byte length + bytes), array count u32, then per
// array: name length u32, name bytes, rank u32, one u32 per dim, numel
// float64 payload. Roundtrips bit-exactly.
struct CheckpointState {
    std::string config_text;
    std::vector<std::pair<std::string, Tensor>> arrays;

    const Tensor& find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const CheckpointState& st);
CheckpointState load_checkpoint(const std::string& path);

struct TrainingState {
    IleModel model;
    AdamState opt;
    std::int64_t train_step = 0;  // global step index driving batch sampling
};

// Model parameters, layer permutations, optimizer moments and both step
// counters, with the canonical config embedded.
CheckpointState snapshot(const IleModel& model, const AdamState& opt, std::int64_t train_step);

// Rebuilds the model from the embedded config, then overwrites every array
// from the checkpoint. Missing or unexpected arrays are format errors.
TrainingState restore(const CheckpointState& st);

}  // namespace ile
