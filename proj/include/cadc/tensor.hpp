// tensor.hpp — dense row-major tensors, convolution layer descriptors, im2col
// unrolling and the reference kernels every partitioned path is checked against.
//
// Layout conventions, fixed globally:
//   * Tensors are flat row-major over their shape.
//   * Unrolled kernel/patch row index for (channel c, kernel row r, kernel col q)
//     is ((c*k1 + r)*k2 + q).
//   * Matrices produced by im2col have one row per output position, positions
//     ordered row-major over (out_y, out_x).
//
// matmul/im2col run OpenMP-parallel over independent output elements; each
// element keeps a fixed ascending-index summation order, so results are
// bit-identical to the serial variants regardless of thread count.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace cadc {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in);

    static Tensor zeros(std::vector<std::size_t> shape_in);

    std::size_t numel() const;
    std::size_t rank() const { return shape.size(); }

    // 2-D accessors; valid only for rank-2 tensors.
    double& at(std::size_t row, std::size_t col) { return data[row * shape[1] + col]; }
    double at(std::size_t row, std::size_t col) const { return data[row * shape[1] + col]; }
};

// Convolution layer descriptor. Kernels are [c_in, k1, k2, c_out].
struct ConvSpec {
    int c_in = 1;
    int k1 = 1;
    int k2 = 1;
    int c_out = 1;
    int stride = 1;
    int padding = 0;

    void validate() const;
    std::size_t unrolled_dim() const;  // D = c_in*k1*k2
    std::size_t out_h(std::size_t in_h) const;
    std::size_t out_w(std::size_t in_w) const;
};

// Kernel unrolled along the input dimension: rows = D, cols = c_out.
struct UnrolledKernel {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major rows x cols

    static UnrolledKernel from_tensor(const Tensor& kernel);  // [c_in,k1,k2,c_out]

    double& at(std::size_t row, std::size_t col) { return data[row * cols + col]; }
    double at(std::size_t row, std::size_t col) const { return data[row * cols + col]; }
};

// Receptive-field unrolling: input [c_in, H, W] -> patch matrix [P, D].
Tensor im2col(const Tensor& input, const ConvSpec& spec);

// Adjoint of im2col: scatter-add patch-matrix gradients [P, D] back onto the
// input grid [c_in, H, W]. Serial; overlapping fields accumulate.
Tensor col2im_add(const Tensor& patch_grads, const ConvSpec& spec, std::size_t in_h,
                  std::size_t in_w);

// a [P, D] x b [D, C] -> [P, C]. Fixed ascending-index summation over D.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_serial(const Tensor& a, const Tensor& b);

// Direct nested-loop convolution, the oracle for all partitioned paths.
// Returns [P, c_out] with P over output positions.
Tensor conv_reference(const Tensor& input, const Tensor& kernel, const ConvSpec& spec);

// Central differences per element: (fn(x + eps*e_i) - fn(x - eps*e_i)) / (2 eps).
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& fn, const Tensor& at,
                        double eps);

}  // namespace cadc
