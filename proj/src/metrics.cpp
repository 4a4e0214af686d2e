#include "ile/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ile/errors.hpp"

namespace ile {

double psnr(const Tensor& a, const Tensor& b, double peak) {
    if (!a.same_shape(b)) throw DimensionError("psnr: shape mismatch");
    if (!(peak > 0.0)) throw ConfigError("psnr peak must be positive");
    double mse = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.numel());
    if (mse == 0.0) return 99.0;
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("ssim: shape mismatch");
    const double n = static_cast<double>(a.numel());
    double mu_a = 0.0, mu_b = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        mu_a += a[i];
        mu_b += b[i];
    }
    mu_a /= n;
    mu_b /= n;
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double da = a[i] - mu_a;
        const double db = b[i] - mu_b;
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

EvalReport evaluate(const IleModel& model, const std::vector<std::vector<Tensor>>& sequences,
                    int k, int m) {
    if (k < 1 || m < 1) throw ConfigError("evaluate: k and m must be >= 1");
    if (sequences.empty()) throw ConfigError("evaluate: empty dataset");
    EvalReport report;
    report.sequence_count = static_cast<int>(sequences.size());
    report.rows.resize(static_cast<std::size_t>(m));
    for (int h = 0; h < m; ++h) report.rows[static_cast<std::size_t>(h)].horizon = h + 1;

    for (const std::vector<Tensor>& seq : sequences) {
        if (static_cast<int>(seq.size()) < k + m)
            throw ConfigError("evaluate: sequences shorter than k + m");
        const std::vector<Tensor> cond(seq.begin(), seq.begin() + k);
        const std::vector<Tensor> preds = predict_frames(model, cond, m);
        const Tensor& last_input = seq[static_cast<std::size_t>(k - 1)];
        for (int h = 0; h < m; ++h) {
            const Tensor& truth = seq[static_cast<std::size_t>(k + h)];
            EvalRow& row = report.rows[static_cast<std::size_t>(h)];
            row.model_psnr += psnr(preds[static_cast<std::size_t>(h)], truth);
            row.model_ssim += ssim(preds[static_cast<std::size_t>(h)], truth);
            row.baseline_psnr += psnr(last_input, truth);
            row.baseline_ssim += ssim(last_input, truth);
        }
    }
    const double inv = 1.0 / static_cast<double>(report.sequence_count);
    for (EvalRow& row : report.rows) {
        row.model_psnr *= inv;
        row.model_ssim *= inv;
        row.baseline_psnr *= inv;
        row.baseline_ssim *= inv;
    }
    return report;
}

void write_report(const std::string& path, const EvalReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "horizon,model_psnr,model_ssim,baseline_psnr,baseline_ssim\n";
    char line[256];
    for (const EvalRow& row : report.rows) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", row.horizon,
                      row.model_psnr, row.model_ssim, row.baseline_psnr, row.baseline_ssim);
        os << line;
    }
    os.flush();
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace ile
