// tensor_io.hpp — binary tensor files and the named-tensor weight archive.
//
// Tensor blob: magic "CADC", u8 version=1, u8 dtype (0=f64, 1=i32), u8 rank,
// u64 dims[rank], payload; all multi-byte fields little-endian, no padding.
//
// Archive: magic "CADA", u8 version=1, u32 entry count, then per entry
// [u16 name_len][name bytes][tensor blob].
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cadc/tensor.hpp"

namespace cadc {

enum class TensorDType : std::uint8_t { F64 = 0, I32 = 1 };

void write_tensor(std::ostream& os, const Tensor& t, TensorDType dtype = TensorDType::F64);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::string& path, const Tensor& t,
                 TensorDType dtype = TensorDType::F64);
Tensor load_tensor(const std::string& path);

struct WeightArchive {
    std::vector<std::pair<std::string, Tensor>> entries;

    const Tensor& find(const std::string& name) const;  // throws if absent
    bool contains(const std::string& name) const;
    void add(std::string name, Tensor t);

    void save(const std::string& path) const;
    static WeightArchive load(const std::string& path);
};

}  // namespace cadc
