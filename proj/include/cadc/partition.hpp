// partition.hpp — splitting an unrolled kernel across size-limited N x N
// crossbars. Segments are contiguous runs of the canonical unroll order; the
// last segment is zero-padded up to the crossbar row count so padded rows
// contribute exactly 0 to every psum.
#pragma once

#include <cstdint>
#include <vector>

#include "cadc/tensor.hpp"

namespace cadc {

struct CrossbarConfig {
    int n_rows = 64;
    int n_cols = 64;
    int weight_bits_per_cell = 2;  // one ternary value per cell
    int adc_resolution_bits = 4;   // 1..5

    void validate() const;
};

struct SegmentMap {
    struct Range {
        std::size_t begin = 0;  // half-open over unrolled rows
        std::size_t end = 0;
        std::size_t size() const { return end - begin; }
    };

    std::vector<Range> segments;
    std::size_t s_count = 0;
    std::size_t pad_rows = 0;   // zero rows appended to the last segment
    std::size_t col_tiles = 1;  // column tiles when cols exceed n_cols

    std::size_t total_rows() const;  // D
};

struct PartitionedKernel {
    // One weight matrix per segment, each [n_rows x cols]; rows past the
    // segment's real extent are zero.
    std::vector<Tensor> segment_weights;
    SegmentMap map;
    std::size_t cols = 0;
};

// S = ceil(D / n_rows).
std::size_t num_segments(std::size_t unrolled_rows, const CrossbarConfig& xbar);
std::size_t num_segments(const ConvSpec& spec, const CrossbarConfig& xbar);

PartitionedKernel partition(const UnrolledKernel& kernel, const CrossbarConfig& xbar);

// Exact inverse of partition (padding stripped). Throws on an inconsistent map.
UnrolledKernel reconstruct(const PartitionedKernel& pk);

struct PsumCountArgs {
    std::uint64_t output_positions = 1;
    int weight_bits = 2;
    int input_bits = 4;
    bool input_bit_serial = false;
};

// output_positions * c_out * S * weight_slices * (input_bit_serial ? input_bits : 1)
// with weight_slices = ceil(weight_bits / weight_bits_per_cell).
std::uint64_t psum_count(const ConvSpec& spec, const CrossbarConfig& xbar,
                         const PsumCountArgs& args);

// Baseline without partitioning or slicing: S = 1, weight_slices = 1.
std::uint64_t psum_count_unpartitioned(const ConvSpec& spec, std::uint64_t output_positions);

}  // namespace cadc
