#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ile {

// Dense row-major double tensor. Rank 0 (scalar), 1 (vector) and 2 (matrix)
// are the ranks the rest of the toolkit uses; the container itself is
// rank-agnostic. Every arithmetic kernel verifies its result is finite and
// throws NumericError otherwise, so NaN/Inf never propagates silently.
class Tensor {
public:
    Tensor() : data_(1, 0.0) {}  // rank-0 scalar zero
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v);
    static Tensor identity(int n);

    int rank() const { return static_cast<int>(shape_.size()); }
    const std::vector<int>& shape() const { return shape_; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Rank-2 element access.
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

    int rows() const { return shape_.empty() ? 1 : shape_[0]; }
    int cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

    double scalar_value() const;
    bool finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool bit_equal(const Tensor& other) const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

// ---- pure kernels (shared by the plain and the traced execution paths) ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
// alpha * a + beta, elementwise
Tensor axpb(const Tensor& a, double alpha, double beta);

// Matrix product. a must be rank-2 MxK; b may be rank-2 KxN or rank-1 K
// (treated as a column, result rank-1 M).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// M^T M for rank-2 M (symmetric PxP Gram matrix).
Tensor gram(const Tensor& m);

Tensor sum(const Tensor& a);  // rank-0 result
Tensor tanh_t(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor abs_t(const Tensor& a);
Tensor sqrt_t(const Tensor& a);  // requires non-negative entries
Tensor relu_t(const Tensor& a);  // max(x, 0)

Tensor slice_vec(const Tensor& a, int start, int len);
Tensor concat_vecs(std::span<const Tensor> parts);
// out[i] = a[perm[i]]
Tensor permute_vec(const Tensor& a, const std::vector<int>& perm);
Tensor concat_rows(std::span<const Tensor> blocks);

double max_abs(const Tensor& a);
double mean_abs(const Tensor& a);

void check_finite(const Tensor& t, const char* what);

}  // namespace ile
