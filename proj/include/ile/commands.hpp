#pragma once

#include <string>

#include "ile/tensor.hpp"

namespace ile {

// Command implementations behind the CLI. They print progress to stdout,
// warnings to stderr, and signal failure by throwing; the binary maps
// exceptions to a nonzero exit status.

struct GenerateArgs {
    std::string config_path;
    std::string out_path;
};
void cmd_generate(const GenerateArgs& args);

struct TrainArgs {
    std::string config_path;
    std::string data_path;
    std::string ckpt_in;      // empty = fresh start
    std::string ckpt_out;
    std::string trace_path;   // empty = <ckpt_out>.trace.csv
    int steps_override = -1;  // <0 = value from config
};
void cmd_train(const TrainArgs& args);

struct PredictArgs {
    std::string ckpt_path;
    std::string data_path;
    std::string out_dir;
    std::string config_path;  // optional; checkpoint config wins on conflict
    int k = 0;                // 0 = cond.len from config
    int horizon = 0;          // 0 = seq.len - k
};
void cmd_predict(const PredictArgs& args);

struct EvalArgs {
    std::string ckpt_path;
    std::string data_path;
    std::string report_path;
    std::string config_path;
    int k = 0;
    int horizon = 0;
};
void cmd_eval(const EvalArgs& args);

// P5 graymap, maxval 255; intensities clamped to [0,1] and rounded.
void write_pgm(const std::string& path, const Tensor& frame, int grid_h, int grid_w);

}  // namespace ile
