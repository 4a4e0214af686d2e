#pragma once

#include <string>
#include <vector>

#include "ile/model.hpp"
#include "ile/tensor.hpp"

namespace ile {

// 10*log10(peak^2 / MSE); exact match is capped at 99 dB so means stay finite.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Single global-window SSIM with C1 = 0.01^2, C2 = 0.03^2 at peak 1 and
// population (co)variances. Frames here are smaller than the usual 11x11
// sliding window, so one window spanning the whole frame is used instead.
double ssim(const Tensor& a, const Tensor& b);

struct EvalRow {
    int horizon = 0;  // 1-based steps past the conditioning prefix
    double model_psnr = 0.0;
    double model_ssim = 0.0;
    double baseline_psnr = 0.0;
    double baseline_ssim = 0.0;
};

struct EvalReport {
    int sequence_count = 0;
    std::vector<EvalRow> rows;
};

// Conditions the model on the first k frames of every sequence and scores
// horizons 1..m against ground truth; the baseline repeats frame k-1.
EvalReport evaluate(const IleModel& model, const std::vector<std::vector<Tensor>>& sequences,
                    int k, int m);

// CSV: header, then one row per horizon.
void write_report(const std::string& path, const EvalReport& report);

}  // namespace ile
