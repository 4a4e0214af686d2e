#include "ile/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "ile/errors.hpp"

namespace ile {

namespace {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int e : shape) {
        if (e < 0) throw DimensionError("negative extent in tensor shape");
        n *= e;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_numel(shape_))
        throw DimensionError("tensor data length does not match shape " + shape_str());
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data_[0] = v;
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

double Tensor::scalar_value() const {
    if (numel() != 1) throw DimensionError("scalar_value on tensor of shape " + shape_str());
    return data_[0];
}

bool Tensor::finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::bit_equal(const Tensor& other) const {
    return shape_ == other.shape_ &&
           std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ']';
    return os.str();
}

void check_finite(const Tensor& t, const char* what) {
    if (!t.finite()) throw NumericError(std::string("non-finite value in ") + what);
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    check_finite(out, "add");
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
    check_finite(out, "sub");
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
    check_finite(out, "mul");
    return out;
}

Tensor axpb(const Tensor& a, double alpha, double beta) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = alpha * a[i] + beta;
    check_finite(out, "axpb");
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2) throw DimensionError("matmul: left operand must be rank-2, got " + a.shape_str());
    const int m = a.shape()[0];
    const int k = a.shape()[1];
    if (b.rank() == 1) {
        if (b.shape()[0] != k)
            throw DimensionError("matmul: inner extents disagree " + a.shape_str() + " vs " + b.shape_str());
        Tensor out({m});
        const double* ad = a.data();
        const double* bd = b.data();
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            const double* row = ad + static_cast<std::size_t>(i) * k;
            for (int p = 0; p < k; ++p) s += row[p] * bd[p];
            out[i] = s;
        }
        check_finite(out, "matmul");
        return out;
    }
    if (b.rank() != 2) throw DimensionError("matmul: right operand must be rank-1 or rank-2");
    if (b.shape()[0] != k)
        throw DimensionError("matmul: inner extents disagree " + a.shape_str() + " vs " + b.shape_str());
    const int n = b.shape()[1];
    Tensor out({m, n});
    const double* ad = a.data();
    const double* bd = b.data();
    double* od = out.data();
    for (int i = 0; i < m; ++i) {
        double* orow = od + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = ad[static_cast<std::size_t>(i) * k + p];
            const double* brow = bd + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    check_finite(out, "matmul");
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose: rank-2 required");
    const int m = a.shape()[0], n = a.shape()[1];
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor gram(const Tensor& m) {
    if (m.rank() != 2) throw DimensionError("gram: rank-2 required");
    const int rows = m.shape()[0], n = m.shape()[1];
    Tensor out({n, n});
    double* od = out.data();
    const double* md = m.data();
    for (int p = 0; p < rows; ++p) {
        const double* r = md + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < n; ++i) {
            const double ri = r[i];
            double* orow = od + static_cast<std::size_t>(i) * n;
            for (int j = i; j < n; ++j) orow[j] += ri * r[j];
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) out.at(i, j) = out.at(j, i);
    check_finite(out, "gram");
    return out;
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i];
    Tensor out = Tensor::scalar(s);
    check_finite(out, "sum");
    return out;
}

Tensor tanh_t(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = std::tanh(a[i]);
    check_finite(out, "tanh");
    return out;
}

Tensor exp_t(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = std::exp(a[i]);
    check_finite(out, "exp");
    return out;
}

Tensor abs_t(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = std::fabs(a[i]);
    check_finite(out, "abs");
    return out;
}

Tensor sqrt_t(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        if (a[i] < 0.0) throw NumericError("sqrt of negative value");
        out[i] = std::sqrt(a[i]);
    }
    check_finite(out, "sqrt");
    return out;
}

Tensor relu_t(const Tensor& a) {
    Tensor out(a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
    check_finite(out, "relu");
    return out;
}

Tensor slice_vec(const Tensor& a, int start, int len) {
    if (a.rank() != 1) throw DimensionError("slice: rank-1 required");
    if (start < 0 || len < 0 || start + len > a.shape()[0]) throw DimensionError("slice out of range");
    Tensor out({len});
    for (int i = 0; i < len; ++i) out[i] = a[start + i];
    return out;
}

Tensor concat_vecs(std::span<const Tensor> parts) {
    int total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != 1) throw DimensionError("concat: rank-1 parts required");
        total += p.shape()[0];
    }
    Tensor out({total});
    int off = 0;
    for (const Tensor& p : parts) {
        for (int i = 0; i < p.shape()[0]; ++i) out[off + i] = p[i];
        off += p.shape()[0];
    }
    return out;
}

Tensor permute_vec(const Tensor& a, const std::vector<int>& perm) {
    if (a.rank() != 1) throw DimensionError("permute: rank-1 required");
    if (static_cast<int>(perm.size()) != a.shape()[0]) throw DimensionError("permute: index count mismatch");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < perm.size(); ++i) out[static_cast<std::int64_t>(i)] = a[perm[i]];
    return out;
}

Tensor concat_rows(std::span<const Tensor> blocks) {
    if (blocks.empty()) throw DimensionError("concat_rows: no blocks");
    const int cols = blocks.front().shape().size() == 2 ? blocks.front().shape()[1] : -1;
    if (cols < 0) throw DimensionError("concat_rows: rank-2 blocks required");
    int rows = 0;
    for (const Tensor& b : blocks) {
        if (b.rank() != 2 || b.shape()[1] != cols) throw DimensionError("concat_rows: column mismatch");
        rows += b.shape()[0];
    }
    Tensor out({rows, cols});
    int r = 0;
    for (const Tensor& b : blocks) {
        std::memcpy(out.data() + static_cast<std::size_t>(r) * cols, b.data(),
                    static_cast<std::size_t>(b.numel()) * sizeof(double));
        r += b.shape()[0];
    }
    return out;
}

double max_abs(const Tensor& a) {
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

double mean_abs(const Tensor& a) {
    if (a.numel() == 0) return 0.0;
    double s = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) s += std::fabs(a[i]);
    return s / static_cast<double>(a.numel());
}

}  // namespace ile
