#include "cadc/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "cadc/common.hpp"

namespace cadc {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d < 1) throw std::invalid_argument("tensor shape entries must be >= 1");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument(detail::str("tensor data length ", data.size(),
                                                " does not match shape product ",
                                                shape_numel(shape)));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape_in) {
    const std::size_t n = shape_numel(shape_in);
    Tensor t;
    t.shape = std::move(shape_in);
    t.data.assign(n, 0.0);
    return t;
}

std::size_t Tensor::numel() const { return data.size(); }

void ConvSpec::validate() const {
    if (c_in < 1 || k1 < 1 || k2 < 1 || c_out < 1) {
        throw std::invalid_argument(detail::str("conv spec dims must be >= 1, got c_in=", c_in,
                                                " k1=", k1, " k2=", k2, " c_out=", c_out));
    }
    if (stride < 1) throw std::invalid_argument(detail::str("stride must be >= 1, got ", stride));
    if (padding < 0)
        throw std::invalid_argument(detail::str("padding must be >= 0, got ", padding));
}

std::size_t ConvSpec::unrolled_dim() const {
    return static_cast<std::size_t>(c_in) * static_cast<std::size_t>(k1) *
           static_cast<std::size_t>(k2);
}

namespace {

std::size_t out_extent(std::size_t in, int k, int stride, int padding, const char* axis) {
    const long long span = static_cast<long long>(in) + 2LL * padding - k;
    if (span < 0) {
        throw std::invalid_argument(detail::str("kernel extent ", k, " exceeds padded input ",
                                                axis, " extent ", in + 2 * padding));
    }
    return static_cast<std::size_t>(span / stride + 1);
}

}  // namespace

std::size_t ConvSpec::out_h(std::size_t in_h) const {
    return out_extent(in_h, k1, stride, padding, "H");
}

std::size_t ConvSpec::out_w(std::size_t in_w) const {
    return out_extent(in_w, k2, stride, padding, "W");
}

UnrolledKernel UnrolledKernel::from_tensor(const Tensor& kernel) {
    if (kernel.rank() != 4) {
        throw std::invalid_argument(
            detail::str("kernel tensor must be rank 4 [c_in,k1,k2,c_out], got rank ",
                        kernel.rank()));
    }
    const std::size_t c_in = kernel.shape[0];
    const std::size_t k1 = kernel.shape[1];
    const std::size_t k2 = kernel.shape[2];
    const std::size_t c_out = kernel.shape[3];

    UnrolledKernel uk;
    uk.rows = c_in * k1 * k2;
    uk.cols = c_out;
    uk.data.resize(uk.rows * uk.cols);
    for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t r = 0; r < k1; ++r) {
            for (std::size_t q = 0; q < k2; ++q) {
                const std::size_t row = (c * k1 + r) * k2 + q;
                for (std::size_t k = 0; k < c_out; ++k) {
                    uk.at(row, k) = kernel.data[((c * k1 + r) * k2 + q) * c_out + k];
                }
            }
        }
    }
    return uk;
}

Tensor im2col(const Tensor& input, const ConvSpec& spec) {
    spec.validate();
    if (input.rank() != 3) {
        throw std::invalid_argument(
            detail::str("im2col input must be rank 3 [c,H,W], got rank ", input.rank()));
    }
    if (input.shape[0] != static_cast<std::size_t>(spec.c_in)) {
        throw std::invalid_argument(detail::str("im2col channel mismatch: input has ",
                                                input.shape[0], " channels, spec expects ",
                                                spec.c_in));
    }
    const std::size_t in_h = input.shape[1];
    const std::size_t in_w = input.shape[2];
    const std::size_t oh = spec.out_h(in_h);
    const std::size_t ow = spec.out_w(in_w);
    const std::size_t positions = oh * ow;
    const std::size_t dim = spec.unrolled_dim();

    Tensor patches = Tensor::zeros({positions, dim});
    const long long pad = spec.padding;
    const long long stride = spec.stride;

#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(positions); ++p) {
        const long long oy = p / static_cast<long long>(ow);
        const long long ox = p % static_cast<long long>(ow);
        double* row = &patches.data[static_cast<std::size_t>(p) * dim];
        for (int c = 0; c < spec.c_in; ++c) {
            for (int r = 0; r < spec.k1; ++r) {
                const long long iy = oy * stride - pad + r;
                for (int q = 0; q < spec.k2; ++q) {
                    const long long ix = ox * stride - pad + q;
                    const std::size_t d =
                        (static_cast<std::size_t>(c) * spec.k1 + r) * spec.k2 + q;
                    if (iy >= 0 && iy < static_cast<long long>(in_h) && ix >= 0 &&
                        ix < static_cast<long long>(in_w)) {
                        row[d] = input.data[(static_cast<std::size_t>(c) * in_h + iy) * in_w + ix];
                    }
                }
            }
        }
    }
    return patches;
}

Tensor col2im_add(const Tensor& patch_grads, const ConvSpec& spec, std::size_t in_h,
                  std::size_t in_w) {
    spec.validate();
    if (patch_grads.rank() != 2 || patch_grads.shape[1] != spec.unrolled_dim()) {
        throw std::invalid_argument("col2im_add expects [P, D] with D matching the spec");
    }
    const std::size_t oh = spec.out_h(in_h);
    const std::size_t ow = spec.out_w(in_w);
    if (patch_grads.shape[0] != oh * ow) {
        throw std::invalid_argument(detail::str("col2im_add position count ",
                                                patch_grads.shape[0], " != ", oh * ow));
    }
    const std::size_t dim = spec.unrolled_dim();
    Tensor grad = Tensor::zeros({static_cast<std::size_t>(spec.c_in), in_h, in_w});
    for (std::size_t p = 0; p < oh * ow; ++p) {
        const long long oy = static_cast<long long>(p / ow);
        const long long ox = static_cast<long long>(p % ow);
        const double* row = &patch_grads.data[p * dim];
        for (int c = 0; c < spec.c_in; ++c) {
            for (int r = 0; r < spec.k1; ++r) {
                const long long iy = oy * spec.stride - spec.padding + r;
                if (iy < 0 || iy >= static_cast<long long>(in_h)) continue;
                for (int q = 0; q < spec.k2; ++q) {
                    const long long ix = ox * spec.stride - spec.padding + q;
                    if (ix < 0 || ix >= static_cast<long long>(in_w)) continue;
                    const std::size_t d =
                        (static_cast<std::size_t>(c) * spec.k1 + r) * spec.k2 + q;
                    grad.data[(static_cast<std::size_t>(c) * in_h + iy) * in_w + ix] += row[d];
                }
            }
        }
    }
    return grad;
}

namespace {

void check_matmul_dims(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw std::invalid_argument(detail::str("matmul expects rank-2 tensors, got ranks ",
                                                a.rank(), " and ", b.rank()));
    }
    if (a.shape[1] != b.shape[0]) {
        throw std::invalid_argument(detail::str("matmul inner dims differ: ", a.shape[1], " vs ",
                                                b.shape[0]));
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_matmul_dims(a, b);
    const std::size_t rows = a.shape[0];
    const std::size_t inner = a.shape[1];
    const std::size_t cols = b.shape[1];
    Tensor out = Tensor::zeros({rows, cols});

#pragma omp parallel for schedule(static)
    for (long long p = 0; p < static_cast<long long>(rows); ++p) {
        const double* arow = &a.data[static_cast<std::size_t>(p) * inner];
        double* orow = &out.data[static_cast<std::size_t>(p) * cols];
        for (std::size_t k = 0; k < cols; ++k) {
            double acc = 0.0;
            for (std::size_t d = 0; d < inner; ++d) {
                acc += arow[d] * b.data[d * cols + k];
            }
            orow[k] = acc;
        }
    }
    return out;
}

Tensor matmul_serial(const Tensor& a, const Tensor& b) {
    check_matmul_dims(a, b);
    const std::size_t rows = a.shape[0];
    const std::size_t inner = a.shape[1];
    const std::size_t cols = b.shape[1];
    Tensor out = Tensor::zeros({rows, cols});
    for (std::size_t p = 0; p < rows; ++p) {
        for (std::size_t k = 0; k < cols; ++k) {
            double acc = 0.0;
            for (std::size_t d = 0; d < inner; ++d) {
                acc += a.data[p * inner + d] * b.data[d * cols + k];
            }
            out.data[p * cols + k] = acc;
        }
    }
    return out;
}

Tensor conv_reference(const Tensor& input, const Tensor& kernel, const ConvSpec& spec) {
    spec.validate();
    if (input.rank() != 3) {
        throw std::invalid_argument(
            detail::str("conv input must be rank 3 [c,H,W], got rank ", input.rank()));
    }
    if (kernel.rank() != 4 || kernel.shape[0] != static_cast<std::size_t>(spec.c_in) ||
        kernel.shape[1] != static_cast<std::size_t>(spec.k1) ||
        kernel.shape[2] != static_cast<std::size_t>(spec.k2) ||
        kernel.shape[3] != static_cast<std::size_t>(spec.c_out)) {
        throw std::invalid_argument("conv kernel shape does not match spec [c_in,k1,k2,c_out]");
    }
    if (input.shape[0] != static_cast<std::size_t>(spec.c_in)) {
        throw std::invalid_argument(detail::str("conv channel mismatch: input has ",
                                                input.shape[0], " channels, spec expects ",
                                                spec.c_in));
    }
    const std::size_t in_h = input.shape[1];
    const std::size_t in_w = input.shape[2];
    const std::size_t oh = spec.out_h(in_h);
    const std::size_t ow = spec.out_w(in_w);
    const std::size_t c_out = static_cast<std::size_t>(spec.c_out);

    Tensor out = Tensor::zeros({oh * ow, c_out});
    for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::size_t p = oy * ow + ox;
            for (std::size_t k = 0; k < c_out; ++k) {
                double acc = 0.0;
                for (int c = 0; c < spec.c_in; ++c) {
                    for (int r = 0; r < spec.k1; ++r) {
                        const long long iy =
                            static_cast<long long>(oy) * spec.stride - spec.padding + r;
                        if (iy < 0 || iy >= static_cast<long long>(in_h)) continue;
                        for (int q = 0; q < spec.k2; ++q) {
                            const long long ix =
                                static_cast<long long>(ox) * spec.stride - spec.padding + q;
                            if (ix < 0 || ix >= static_cast<long long>(in_w)) continue;
                            const double x =
                                input.data[(static_cast<std::size_t>(c) * in_h + iy) * in_w + ix];
                            const double w =
                                kernel.data[((static_cast<std::size_t>(c) * spec.k1 + r) *
                                                 spec.k2 +
                                             q) *
                                                c_out +
                                            k];
                            acc += x * w;
                        }
                    }
                }
                out.data[p * c_out + k] = acc;
            }
        }
    }
    return out;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& fn, const Tensor& at,
                        double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad eps must be > 0");
    Tensor grad = Tensor::zeros(at.shape);
    Tensor probe = at;
    for (std::size_t i = 0; i < at.numel(); ++i) {
        const double orig = probe.data[i];
        probe.data[i] = orig + eps;
        const double hi = fn(probe);
        probe.data[i] = orig - eps;
        const double lo = fn(probe);
        probe.data[i] = orig;
        if (!std::isfinite(hi) || !std::isfinite(lo)) {
            throw std::runtime_error(
                detail::str("finite_diff_grad: non-finite objective at element ", i));
        }
        grad.data[i] = (hi - lo) / (2.0 * eps);
    }
    return grad;
}

}  // namespace cadc
