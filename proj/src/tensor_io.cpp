#include "cadc/tensor_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cadc/common.hpp"

namespace cadc {
namespace {

constexpr char kTensorMagic[4] = {'C', 'A', 'D', 'C'};
constexpr char kArchiveMagic[4] = {'C', 'A', 'D', 'A'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        os.put(static_cast<char>((value >> (8 * i)) & 0xffu));
    }
}

template <typename T>
T read_le(std::istream& is) {
    static_assert(std::is_unsigned_v<T>);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        int byte = is.get();
        if (byte == std::char_traits<char>::eof()) {
            throw std::runtime_error("tensor stream truncated");
        }
        value |= static_cast<T>(static_cast<std::uint8_t>(byte)) << (8 * i);
    }
    return value;
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_le(os, bits);
}

double read_f64(std::istream& is) {
    std::uint64_t bits = read_le<std::uint64_t>(is);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t, TensorDType dtype) {
    os.write(kTensorMagic, 4);
    os.put(static_cast<char>(kVersion));
    os.put(static_cast<char>(dtype));
    if (t.shape.size() > 255) throw std::invalid_argument("tensor rank exceeds 255");
    os.put(static_cast<char>(t.shape.size()));
    for (std::size_t dim : t.shape) {
        write_le(os, static_cast<std::uint64_t>(dim));
    }
    if (dtype == TensorDType::F64) {
        for (double v : t.data) write_f64(os, v);
    } else {
        for (double v : t.data) {
            double r = std::nearbyint(v);
            if (r != v || r < std::numeric_limits<std::int32_t>::min() ||
                r > std::numeric_limits<std::int32_t>::max()) {
                throw std::invalid_argument(
                    detail::str("value ", v, " not representable as i32"));
            }
            write_le(os, static_cast<std::uint32_t>(static_cast<std::int32_t>(r)));
        }
    }
    if (!os) throw std::runtime_error("tensor write failed");
}

Tensor read_tensor(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kTensorMagic, 4) != 0) {
        throw std::runtime_error("bad tensor magic");
    }
    std::uint8_t version = read_le<std::uint8_t>(is);
    if (version != kVersion) {
        throw std::runtime_error(detail::str("unsupported tensor version ", int(version)));
    }
    std::uint8_t dtype_raw = read_le<std::uint8_t>(is);
    if (dtype_raw > 1) {
        throw std::runtime_error(detail::str("unknown tensor dtype ", int(dtype_raw)));
    }
    auto dtype = static_cast<TensorDType>(dtype_raw);
    std::uint8_t rank = read_le<std::uint8_t>(is);
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (auto& dim : shape) {
        std::uint64_t d = read_le<std::uint64_t>(is);
        if (d == 0 || d > (std::uint64_t(1) << 32)) {
            throw std::runtime_error("tensor dimension out of range");
        }
        dim = static_cast<std::size_t>(d);
        if (count > std::size_t(1) << 32) throw std::runtime_error("tensor too large");
        count *= dim;
    }
    std::vector<double> data(count);
    for (auto& v : data) {
        if (dtype == TensorDType::F64) {
            v = read_f64(is);
        } else {
            v = static_cast<std::int32_t>(read_le<std::uint32_t>(is));
        }
    }
    return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t, TensorDType dtype) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    write_tensor(os, t, dtype);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return read_tensor(is);
}

const Tensor& WeightArchive::find(const std::string& name) const {
    for (const auto& [key, tensor] : entries) {
        if (key == name) return tensor;
    }
    throw std::out_of_range("archive has no tensor named '" + name + "'");
}

bool WeightArchive::contains(const std::string& name) const {
    for (const auto& [key, tensor] : entries) {
        (void)tensor;
        if (key == name) return true;
    }
    return false;
}

void WeightArchive::add(std::string name, Tensor t) {
    if (contains(name)) {
        throw std::invalid_argument("duplicate archive entry '" + name + "'");
    }
    entries.emplace_back(std::move(name), std::move(t));
}

void WeightArchive::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kArchiveMagic, 4);
    os.put(static_cast<char>(kVersion));
    write_le(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& [name, tensor] : entries) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw std::invalid_argument("archive entry name too long");
        }
        write_le(os, static_cast<std::uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_tensor(os, tensor, TensorDType::F64);
    }
    if (!os) throw std::runtime_error("archive write failed");
}

WeightArchive WeightArchive::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kArchiveMagic, 4) != 0) {
        throw std::runtime_error("bad archive magic");
    }
    std::uint8_t version = read_le<std::uint8_t>(is);
    if (version != kVersion) {
        throw std::runtime_error(detail::str("unsupported archive version ", int(version)));
    }
    std::uint32_t count = read_le<std::uint32_t>(is);
    WeightArchive archive;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t name_len = read_le<std::uint16_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw std::runtime_error("archive stream truncated");
        archive.add(std::move(name), read_tensor(is));
    }
    return archive;
}

}  // namespace cadc
