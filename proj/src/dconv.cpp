#include "cadc/dconv.hpp"

#include <stdexcept>

#include "cadc/common.hpp"

namespace cadc {

PsumTensor PsumTensor::zeros(std::size_t s, std::size_t p, std::size_t k, Stage stage_in) {
    PsumTensor t;
    t.s_count = s;
    t.positions = p;
    t.channels = k;
    t.stage = stage_in;
    t.data.assign(s * p * k, 0.0);
    return t;
}

CadcLayer CadcLayer::make(PartitionedKernel pk, DendriteFn fn_in) {
    CadcLayer layer;
    layer.soma_weights.assign(pk.map.s_count, 1.0);
    layer.partitioned = std::move(pk);
    layer.fn = fn_in;
    return layer;
}

namespace {

void check_input(const CadcLayer& layer, const Tensor& unrolled_input) {
    if (unrolled_input.rank() != 2) {
        throw std::invalid_argument("unrolled input must be rank 2 [P, D]");
    }
    const std::size_t d = layer.partitioned.map.total_rows();
    if (unrolled_input.shape[1] != d) {
        throw std::invalid_argument(detail::str("unrolled input has ", unrolled_input.shape[1],
                                                " columns but the partitioned kernel expects ",
                                                d));
    }
    if (layer.soma_weights.size() != layer.partitioned.map.s_count) {
        throw std::invalid_argument("soma weight count does not match segment count");
    }
}

// One (segment, position) row of psums; ascending row order inside the segment.
inline void segment_row_psums(const PartitionedKernel& pk, std::size_t s, const double* input_row,
                              double* out_row) {
    const SegmentMap::Range& range = pk.map.segments[s];
    const Tensor& seg = pk.segment_weights[s];
    const std::size_t cols = pk.cols;
    for (std::size_t k = 0; k < cols; ++k) out_row[k] = 0.0;
    for (std::size_t i = 0; i < range.size(); ++i) {
        const double x = input_row[range.begin + i];
        const double* wrow = &seg.data[i * cols];
        for (std::size_t k = 0; k < cols; ++k) {
            out_row[k] += x * wrow[k];
        }
    }
}

}  // namespace

PsumTensor segment_psums(const CadcLayer& layer, const Tensor& unrolled_input) {
    check_input(layer, unrolled_input);
    const std::size_t s_count = layer.partitioned.map.s_count;
    const std::size_t positions = unrolled_input.shape[0];
    const std::size_t channels = layer.partitioned.cols;
    const std::size_t dim = unrolled_input.shape[1];

    PsumTensor psums = PsumTensor::zeros(s_count, positions, channels, PsumTensor::Stage::Raw);
    const long long cells = static_cast<long long>(s_count * positions);

#pragma omp parallel for schedule(static)
    for (long long cell = 0; cell < cells; ++cell) {
        const std::size_t s = static_cast<std::size_t>(cell) / positions;
        const std::size_t p = static_cast<std::size_t>(cell) % positions;
        segment_row_psums(layer.partitioned, s, &unrolled_input.data[p * dim],
                          &psums.data[(s * positions + p) * channels]);
    }
    return psums;
}

PsumTensor segment_psums_serial(const CadcLayer& layer, const Tensor& unrolled_input) {
    check_input(layer, unrolled_input);
    const std::size_t s_count = layer.partitioned.map.s_count;
    const std::size_t positions = unrolled_input.shape[0];
    const std::size_t channels = layer.partitioned.cols;
    const std::size_t dim = unrolled_input.shape[1];

    PsumTensor psums = PsumTensor::zeros(s_count, positions, channels, PsumTensor::Stage::Raw);
    for (std::size_t s = 0; s < s_count; ++s) {
        for (std::size_t p = 0; p < positions; ++p) {
            segment_row_psums(layer.partitioned, s, &unrolled_input.data[p * dim],
                              &psums.data[(s * positions + p) * channels]);
        }
    }
    return psums;
}

Tensor vconv_forward(const CadcLayer& layer, const Tensor& unrolled_input) {
    const PsumTensor psums = segment_psums(layer, unrolled_input);
    Tensor out = Tensor::zeros({psums.positions, psums.channels});
    const std::size_t plane = psums.positions * psums.channels;
    for (std::size_t s = 0; s < psums.s_count; ++s) {
        const double* src = &psums.data[s * plane];
        for (std::size_t i = 0; i < plane; ++i) {
            out.data[i] += src[i];
        }
    }
    return out;
}

namespace {

CadcForwardResult cadc_from_psums(const CadcLayer& layer, PsumTensor psums) {
    const std::size_t plane = psums.positions * psums.channels;
    for (std::size_t s = 0; s < psums.s_count; ++s) {
        double* seg = &psums.data[s * plane];
        for (std::size_t i = 0; i < plane; ++i) {
            seg[i] = apply_f(layer.fn, seg[i]);
        }
    }
    psums.stage = PsumTensor::Stage::PostF;

    Tensor out = Tensor::zeros({psums.positions, psums.channels});
    for (std::size_t s = 0; s < psums.s_count; ++s) {
        const double w = layer.soma_weights[s];
        const double* src = &psums.data[s * plane];
        for (std::size_t i = 0; i < plane; ++i) {
            out.data[i] += w * src[i];
        }
    }
    return {std::move(out), std::move(psums)};
}

}  // namespace

CadcForwardResult cadc_forward(const CadcLayer& layer, const Tensor& unrolled_input) {
    return cadc_from_psums(layer, segment_psums(layer, unrolled_input));
}

CadcForwardResult cadc_forward_serial(const CadcLayer& layer, const Tensor& unrolled_input) {
    return cadc_from_psums(layer, segment_psums_serial(layer, unrolled_input));
}

SparsityStats sparsity_stats(const PsumTensor& psums) {
    if (psums.data.empty()) throw std::invalid_argument("sparsity_stats: empty psum tensor");
    SparsityStats stats;
    stats.total = psums.data.size();
    stats.per_segment.resize(psums.s_count, 0.0);
    const std::size_t plane = psums.positions * psums.channels;
    for (std::size_t s = 0; s < psums.s_count; ++s) {
        std::size_t zeros = 0;
        const double* seg = &psums.data[s * plane];
        for (std::size_t i = 0; i < plane; ++i) {
            if (seg[i] == 0.0) ++zeros;
        }
        stats.per_segment[s] = static_cast<double>(zeros) / static_cast<double>(plane);
        stats.zeros += zeros;
    }
    stats.zero_fraction = static_cast<double>(stats.zeros) / static_cast<double>(stats.total);
    return stats;
}

CadcGradients cadc_backward(const CadcLayer& layer, const Tensor& unrolled_input,
                            const Tensor& upstream_grad) {
    check_input(layer, unrolled_input);
    const std::size_t positions = unrolled_input.shape[0];
    const std::size_t channels = layer.partitioned.cols;
    if (upstream_grad.rank() != 2 || upstream_grad.shape[0] != positions ||
        upstream_grad.shape[1] != channels) {
        throw std::invalid_argument("upstream gradient must be [P, c_out]");
    }

    const PartitionedKernel& pk = layer.partitioned;
    const std::size_t s_count = pk.map.s_count;
    const std::size_t dim = pk.map.total_rows();

    const PsumTensor raw = segment_psums(layer, unrolled_input);

    // dL/dpsum[s,p,k] = upstream[p,k] * w[s] * f'(psum[s,p,k])
    PsumTensor dpsum = PsumTensor::zeros(s_count, positions, channels, PsumTensor::Stage::Raw);
    const std::size_t plane = positions * channels;
#pragma omp parallel for schedule(static)
    for (long long s = 0; s < static_cast<long long>(s_count); ++s) {
        const double w = layer.soma_weights[static_cast<std::size_t>(s)];
        const double* raw_seg = &raw.data[static_cast<std::size_t>(s) * plane];
        double* d_seg = &dpsum.data[static_cast<std::size_t>(s) * plane];
        for (std::size_t i = 0; i < plane; ++i) {
            d_seg[i] = upstream_grad.data[i] * w * apply_f_grad(layer.fn, raw_seg[i]);
        }
    }

    CadcGradients grads;
    grads.grad_weights.rows = dim;
    grads.grad_weights.cols = channels;
    grads.grad_weights.data.assign(dim * channels, 0.0);
    grads.grad_input = Tensor::zeros({positions, dim});
    grads.grad_soma.assign(s_count, 0.0);

    // grad_w[row,k] = sum_p x[p,row] * dpsum[seg(row),p,k]
#pragma omp parallel for schedule(static)
    for (long long row = 0; row < static_cast<long long>(dim); ++row) {
        const std::size_t r = static_cast<std::size_t>(row);
        std::size_t s = 0;
        while (pk.map.segments[s].end <= r) ++s;
        const double* d_seg = &dpsum.data[s * plane];
        double* grow = &grads.grad_weights.data[r * channels];
        for (std::size_t p = 0; p < positions; ++p) {
            const double x = unrolled_input.data[p * dim + r];
            const double* drow = &d_seg[p * channels];
            for (std::size_t k = 0; k < channels; ++k) {
                grow[k] += x * drow[k];
            }
        }
    }

    // grad_x[p,row] = sum_k w^s[i,k] * dpsum[s,p,k]
#pragma omp parallel for schedule(static)
    for (long long pp = 0; pp < static_cast<long long>(positions); ++pp) {
        const std::size_t p = static_cast<std::size_t>(pp);
        double* xrow = &grads.grad_input.data[p * dim];
        for (std::size_t s = 0; s < s_count; ++s) {
            const SegmentMap::Range& range = pk.map.segments[s];
            const Tensor& seg = pk.segment_weights[s];
            const double* drow = &dpsum.data[(s * positions + p) * channels];
            for (std::size_t i = 0; i < range.size(); ++i) {
                double acc = 0.0;
                const double* wrow = &seg.data[i * channels];
                for (std::size_t k = 0; k < channels; ++k) {
                    acc += wrow[k] * drow[k];
                }
                xrow[range.begin + i] = acc;
            }
        }
    }

    // grad_soma[s] = sum_{p,k} upstream[p,k] * f(psum[s,p,k])
    for (std::size_t s = 0; s < s_count; ++s) {
        const double* raw_seg = &raw.data[s * plane];
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            acc += upstream_grad.data[i] * apply_f(layer.fn, raw_seg[i]);
        }
        grads.grad_soma[s] = acc;
    }
    return grads;
}

}  // namespace cadc
