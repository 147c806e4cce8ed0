// codec.hpp — lossless sparse psum compression: a presence bitmask plus packed
// nonzero codes, and a zero-skipping accumulator with exact add accounting.
//
// Block stream format (bit-exact, covered by golden files):
//   [u16 s_count][u8 width_bits][bitmask][payload]
// Multi-byte fields are little-endian. The bitmask is LSB-first over segment
// index and padded to a byte boundary; payload codes are width_bits each,
// bit-packed LSB-first in ascending segment order and padded to a byte
// boundary at the end of each block. Signed payloads are stored as
// width_bits-wide two's complement; signedness is not encoded in the stream
// and must be known to the reader.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace cadc {

struct CompressedPsumBlock {
    std::uint16_t s_count = 0;
    std::uint8_t width_bits = 8;
    std::vector<std::uint8_t> bitmask;  // ceil(s_count/8) bytes, LSB-first
    std::vector<std::int64_t> payload;  // nonzero codes, ascending segment order
    bool signed_codes = false;          // in-memory attribute, not serialized

    bool bit_set(std::size_t index) const {
        return (bitmask[index / 8] >> (index % 8)) & 1u;
    }
    std::size_t popcount() const;
    std::size_t size_bits() const;  // s_count + width_bits * popcount
    void validate() const;          // throws on mask/payload mismatch or range error
};

// Representable code range for a given width/signedness.
std::int64_t code_min(int width_bits, bool signed_codes);
std::int64_t code_max(int width_bits, bool signed_codes);

CompressedPsumBlock compress(std::span<const std::int64_t> psums, int width_bits,
                             bool signed_codes = false);

std::vector<std::int64_t> decompress(const CompressedPsumBlock& block);

// (s_count * width_bits) / size_bits; < 1 means compression loses.
double compression_ratio(const CompressedPsumBlock& block);

struct AccumulatorReport {
    std::int64_t sum = 0;
    std::uint64_t adds_performed = 0;
    std::uint64_t psums_skipped = 0;
};

// sum == naive fold; adds_performed == max(nonzero_count - 1, 0). The
// accumulator is 32-bit; exceeding it is a checked error, never wraparound.
AccumulatorReport zero_skip_accumulate(std::span<const std::int64_t> psums);

void write_block(std::ostream& os, const CompressedPsumBlock& block);
void write_block_stream(std::ostream& os, std::span<const CompressedPsumBlock> blocks);
CompressedPsumBlock read_block(std::istream& is, bool signed_codes = false);
std::vector<CompressedPsumBlock> read_block_stream(std::istream& is, bool signed_codes = false);

}  // namespace cadc
