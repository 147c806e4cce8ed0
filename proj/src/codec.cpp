#include "cadc/codec.hpp"

#include <bit>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cadc/common.hpp"

namespace cadc {

namespace {

void check_width(int width_bits) {
    if (width_bits < 1 || width_bits > 32) {
        throw std::invalid_argument(detail::str("psum width must be in [1,32] bits, got ",
                                                width_bits));
    }
}

}  // namespace

std::int64_t code_min(int width_bits, bool signed_codes) {
    check_width(width_bits);
    return signed_codes ? -(std::int64_t{1} << (width_bits - 1)) : 0;
}

std::int64_t code_max(int width_bits, bool signed_codes) {
    check_width(width_bits);
    return signed_codes ? (std::int64_t{1} << (width_bits - 1)) - 1
                        : (std::int64_t{1} << width_bits) - 1;
}

std::size_t CompressedPsumBlock::popcount() const {
    std::size_t n = 0;
    for (std::uint8_t b : bitmask) n += std::popcount(b);
    return n;
}

std::size_t CompressedPsumBlock::size_bits() const {
    return s_count + static_cast<std::size_t>(width_bits) * popcount();
}

void CompressedPsumBlock::validate() const {
    check_width(width_bits);
    if (bitmask.size() != (static_cast<std::size_t>(s_count) + 7) / 8) {
        throw std::runtime_error(detail::str("corrupt block: bitmask is ", bitmask.size(),
                                             " bytes for s_count ", s_count));
    }
    // Padding bits past s_count must be zero.
    for (std::size_t i = s_count; i < bitmask.size() * 8; ++i) {
        if ((bitmask[i / 8] >> (i % 8)) & 1u) {
            throw std::runtime_error("corrupt block: bitmask padding bit set");
        }
    }
    if (popcount() != payload.size()) {
        throw std::runtime_error(detail::str("corrupt block: bitmask popcount ", popcount(),
                                             " != payload entries ", payload.size()));
    }
    const std::int64_t lo = code_min(width_bits, signed_codes);
    const std::int64_t hi = code_max(width_bits, signed_codes);
    for (std::size_t i = 0; i < payload.size(); ++i) {
        if (payload[i] == 0) throw std::runtime_error("corrupt block: zero code in payload");
        if (payload[i] < lo || payload[i] > hi) {
            throw std::runtime_error(detail::str("corrupt block: payload entry ", i, " value ",
                                                 payload[i], " outside [", lo, ",", hi, "]"));
        }
    }
}

CompressedPsumBlock compress(std::span<const std::int64_t> psums, int width_bits,
                             bool signed_codes) {
    check_width(width_bits);
    if (psums.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw std::invalid_argument(detail::str("block too large: ", psums.size(), " psums"));
    }
    const std::int64_t lo = code_min(width_bits, signed_codes);
    const std::int64_t hi = code_max(width_bits, signed_codes);

    CompressedPsumBlock block;
    block.s_count = static_cast<std::uint16_t>(psums.size());
    block.width_bits = static_cast<std::uint8_t>(width_bits);
    block.signed_codes = signed_codes;
    block.bitmask.assign((psums.size() + 7) / 8, 0);
    for (std::size_t s = 0; s < psums.size(); ++s) {
        const std::int64_t v = psums[s];
        if (v < lo || v > hi) {
            throw std::invalid_argument(detail::str("psum ", s, " value ", v,
                                                    " not representable in ", width_bits,
                                                    signed_codes ? " signed" : " unsigned",
                                                    " bits"));
        }
        if (v != 0) {
            block.bitmask[s / 8] |= static_cast<std::uint8_t>(1u << (s % 8));
            block.payload.push_back(v);
        }
    }
    return block;
}

std::vector<std::int64_t> decompress(const CompressedPsumBlock& block) {
    block.validate();
    std::vector<std::int64_t> out(block.s_count, 0);
    std::size_t next = 0;
    for (std::size_t s = 0; s < block.s_count; ++s) {
        if (block.bit_set(s)) out[s] = block.payload[next++];
    }
    return out;
}

double compression_ratio(const CompressedPsumBlock& block) {
    block.validate();
    return static_cast<double>(static_cast<std::size_t>(block.s_count) * block.width_bits) /
           static_cast<double>(block.size_bits());
}

AccumulatorReport zero_skip_accumulate(std::span<const std::int64_t> psums) {
    AccumulatorReport report;
    std::uint64_t nonzero = 0;
    for (std::int64_t v : psums) {
        if (v == 0) {
            ++report.psums_skipped;
            continue;
        }
        const std::int64_t next = report.sum + v;
        if (next > std::numeric_limits<std::int32_t>::max() ||
            next < std::numeric_limits<std::int32_t>::min()) {
            throw std::overflow_error(detail::str("psum accumulator overflow: ", report.sum,
                                                  " + ", v, " exceeds 32-bit range"));
        }
        if (nonzero > 0) ++report.adds_performed;
        report.sum = next;
        ++nonzero;
    }
    return report;
}

namespace {

class BitWriter {
public:
    explicit BitWriter(std::ostream& os) : os_(os) {}

    void put_bits(std::uint64_t value, int bits) {
        for (int b = 0; b < bits; ++b) {
            if ((value >> b) & 1u) cur_ |= static_cast<std::uint8_t>(1u << fill_);
            if (++fill_ == 8) flush_byte();
        }
    }

    void pad_to_byte() {
        if (fill_ > 0) flush_byte();
    }

private:
    void flush_byte() {
        os_.put(static_cast<char>(cur_));
        cur_ = 0;
        fill_ = 0;
    }

    std::ostream& os_;
    std::uint8_t cur_ = 0;
    int fill_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::istream& is) : is_(is) {}

    std::uint64_t get_bits(int bits) {
        std::uint64_t value = 0;
        for (int b = 0; b < bits; ++b) {
            if (fill_ == 0) {
                const int c = is_.get();
                if (c < 0) throw std::runtime_error("block stream truncated");
                cur_ = static_cast<std::uint8_t>(c);
                fill_ = 8;
            }
            if (cur_ & 1u) value |= std::uint64_t{1} << b;
            cur_ >>= 1;
            --fill_;
        }
        return value;
    }

    void skip_to_byte() { fill_ = 0; }

private:
    std::istream& is_;
    std::uint8_t cur_ = 0;
    int fill_ = 0;
};

}  // namespace

void write_block(std::ostream& os, const CompressedPsumBlock& block) {
    block.validate();
    os.put(static_cast<char>(block.s_count & 0xff));
    os.put(static_cast<char>((block.s_count >> 8) & 0xff));
    os.put(static_cast<char>(block.width_bits));
    for (std::uint8_t b : block.bitmask) os.put(static_cast<char>(b));

    BitWriter writer(os);
    const std::uint64_t mask = block.width_bits >= 64
                                   ? ~std::uint64_t{0}
                                   : (std::uint64_t{1} << block.width_bits) - 1;
    for (std::int64_t code : block.payload) {
        writer.put_bits(static_cast<std::uint64_t>(code) & mask, block.width_bits);
    }
    writer.pad_to_byte();
}

void write_block_stream(std::ostream& os, std::span<const CompressedPsumBlock> blocks) {
    for (const CompressedPsumBlock& block : blocks) write_block(os, block);
}

CompressedPsumBlock read_block(std::istream& is, bool signed_codes) {
    const int lo = is.get();
    const int hi = is.get();
    const int width = is.get();
    if (lo < 0 || hi < 0 || width < 0) throw std::runtime_error("block stream truncated");

    CompressedPsumBlock block;
    block.s_count = static_cast<std::uint16_t>(lo | (hi << 8));
    block.width_bits = static_cast<std::uint8_t>(width);
    block.signed_codes = signed_codes;
    check_width(block.width_bits);

    block.bitmask.resize((static_cast<std::size_t>(block.s_count) + 7) / 8);
    for (std::uint8_t& b : block.bitmask) {
        const int c = is.get();
        if (c < 0) throw std::runtime_error("block stream truncated");
        b = static_cast<std::uint8_t>(c);
    }

    const std::size_t entries = block.popcount();
    BitReader reader(is);
    for (std::size_t i = 0; i < entries; ++i) {
        std::uint64_t raw = reader.get_bits(block.width_bits);
        std::int64_t code;
        if (signed_codes) {
            // Sign-extend from width_bits.
            const std::uint64_t sign_bit = std::uint64_t{1} << (block.width_bits - 1);
            code = static_cast<std::int64_t>((raw ^ sign_bit)) - static_cast<std::int64_t>(sign_bit);
        } else {
            code = static_cast<std::int64_t>(raw);
        }
        block.payload.push_back(code);
    }
    reader.skip_to_byte();
    block.validate();
    return block;
}

std::vector<CompressedPsumBlock> read_block_stream(std::istream& is, bool signed_codes) {
    std::vector<CompressedPsumBlock> blocks;
    while (is.peek() >= 0) {
        blocks.push_back(read_block(is, signed_codes));
    }
    return blocks;
}

}  // namespace cadc
