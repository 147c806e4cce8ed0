#include "cadc/partition.hpp"

#include <algorithm>
#include <stdexcept>

#include "cadc/common.hpp"

namespace cadc {

void CrossbarConfig::validate() const {
    if (n_rows < 1 || n_cols < 1) {
        throw std::invalid_argument(detail::str("crossbar dims must be >= 1, got ", n_rows, "x",
                                                n_cols));
    }
    if (weight_bits_per_cell < 1) {
        throw std::invalid_argument(
            detail::str("weight_bits_per_cell must be >= 1, got ", weight_bits_per_cell));
    }
    if (adc_resolution_bits < 1 || adc_resolution_bits > 5) {
        throw std::invalid_argument(
            detail::str("adc_resolution_bits must be in [1,5], got ", adc_resolution_bits));
    }
}

std::size_t SegmentMap::total_rows() const {
    std::size_t d = 0;
    for (const Range& r : segments) d += r.size();
    return d;
}

std::size_t num_segments(std::size_t unrolled_rows, const CrossbarConfig& xbar) {
    xbar.validate();
    if (unrolled_rows == 0) throw std::invalid_argument("unrolled kernel has zero rows");
    const std::size_t n = static_cast<std::size_t>(xbar.n_rows);
    return (unrolled_rows + n - 1) / n;
}

std::size_t num_segments(const ConvSpec& spec, const CrossbarConfig& xbar) {
    spec.validate();
    return num_segments(spec.unrolled_dim(), xbar);
}

PartitionedKernel partition(const UnrolledKernel& kernel, const CrossbarConfig& xbar) {
    xbar.validate();
    if (kernel.rows == 0 || kernel.cols == 0) {
        throw std::invalid_argument("cannot partition an empty kernel");
    }
    const std::size_t n = static_cast<std::size_t>(xbar.n_rows);
    const std::size_t s_count = num_segments(kernel.rows, xbar);

    PartitionedKernel pk;
    pk.cols = kernel.cols;
    pk.map.s_count = s_count;
    pk.map.col_tiles =
        (kernel.cols + static_cast<std::size_t>(xbar.n_cols) - 1) / xbar.n_cols;
    pk.map.segments.reserve(s_count);
    pk.segment_weights.reserve(s_count);

    for (std::size_t s = 0; s < s_count; ++s) {
        const std::size_t begin = s * n;
        const std::size_t end = std::min(begin + n, kernel.rows);
        pk.map.segments.push_back({begin, end});

        Tensor seg = Tensor::zeros({n, kernel.cols});
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t k = 0; k < kernel.cols; ++k) {
                seg.at(i - begin, k) = kernel.at(i, k);
            }
        }
        pk.segment_weights.push_back(std::move(seg));
    }
    pk.map.pad_rows = s_count * n - kernel.rows;
    return pk;
}

UnrolledKernel reconstruct(const PartitionedKernel& pk) {
    if (pk.segment_weights.size() != pk.map.s_count ||
        pk.map.segments.size() != pk.map.s_count) {
        throw std::invalid_argument(detail::str("segment map lists ", pk.map.s_count,
                                                " segments but ", pk.segment_weights.size(),
                                                " weight matrices are present"));
    }
    UnrolledKernel uk;
    uk.rows = pk.map.total_rows();
    uk.cols = pk.cols;
    uk.data.resize(uk.rows * uk.cols);

    std::size_t expected_begin = 0;
    for (std::size_t s = 0; s < pk.map.s_count; ++s) {
        const SegmentMap::Range& range = pk.map.segments[s];
        const Tensor& seg = pk.segment_weights[s];
        if (range.begin != expected_begin || range.end < range.begin) {
            throw std::invalid_argument(
                detail::str("segment ", s, " range [", range.begin, ",", range.end,
                            ") is not contiguous with previous segments"));
        }
        if (seg.rank() != 2 || seg.shape[1] != pk.cols || seg.shape[0] < range.size()) {
            throw std::invalid_argument(
                detail::str("segment ", s, " weight matrix shape is inconsistent with its range"));
        }
        for (std::size_t i = range.begin; i < range.end; ++i) {
            for (std::size_t k = 0; k < pk.cols; ++k) {
                uk.at(i, k) = seg.at(i - range.begin, k);
            }
        }
        expected_begin = range.end;
    }
    return uk;
}

std::uint64_t psum_count(const ConvSpec& spec, const CrossbarConfig& xbar,
                         const PsumCountArgs& args) {
    spec.validate();
    xbar.validate();
    if (args.output_positions == 0 || args.weight_bits < 1 || args.input_bits < 1) {
        throw std::invalid_argument("psum_count arguments must be positive");
    }
    const std::uint64_t s = num_segments(spec, xbar);
    const std::uint64_t weight_slices =
        (static_cast<std::uint64_t>(args.weight_bits) + xbar.weight_bits_per_cell - 1) /
        xbar.weight_bits_per_cell;
    const std::uint64_t bit_steps = args.input_bit_serial ? args.input_bits : 1;
    return args.output_positions * static_cast<std::uint64_t>(spec.c_out) * s * weight_slices *
           bit_steps;
}

std::uint64_t psum_count_unpartitioned(const ConvSpec& spec, std::uint64_t output_positions) {
    spec.validate();
    if (output_positions == 0) throw std::invalid_argument("output_positions must be positive");
    return output_positions * static_cast<std::uint64_t>(spec.c_out);
}

}  // namespace cadc
