#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sparsegan/tensor.hpp"

namespace sparsegan {

// Versioned little-endian container of named tensors, string blobs, and
// integer counters. Layout:
//
//   magic "SGCK" | u32 version
//   u32 tensor count | per tensor: name, u32 rank, i64 dims..., f64 data...
//   u32 blob count   | per blob:   name, u64 length, raw bytes
//   u32 counter count| per entry:  name, i64 value
//
// Strings are u32 length + bytes. Multi-byte values are little-endian
// regardless of host order.
struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> tensors;
    std::vector<std::pair<std::string, std::string>> blobs;
    std::vector<std::pair<std::string, int64_t>> counters;

    void add_tensor(const std::string& name, const Tensor& t);
    void add_blob(const std::string& name, std::string data);
    void add_counter(const std::string& name, int64_t value);

    const Tensor* tensor(const std::string& name) const;
    const std::string* blob(const std::string& name) const;
    const int64_t* counter(const std::string& name) const;

    Tensor require_tensor(const std::string& name) const;
    const std::string& require_blob(const std::string& name) const;
    int64_t require_counter(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

} // namespace sparsegan
