#pragma once

// Flat binary tensor container.
//
//   "WAHM1"                                   5-byte magic
//   repeated until EOF:
//     u32  name length, name bytes (UTF-8, no terminator)
//     u32  rank
//     u64  dims[rank]
//     f64  payload[prod(dims)], row-major
//
// All integers and floats little-endian.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wahmvc::checkpoint {

inline constexpr char kMagic[] = "WAHM1";

struct Tensor {
    std::string name;
    std::vector<std::uint64_t> dims;  // empty for scalars
    std::vector<double> values;       // row-major

    std::uint64_t element_count() const;
};

std::vector<unsigned char> encode(const std::vector<Tensor>& tensors);
// Throws IoError on a bad magic, truncated record or size mismatch.
std::vector<Tensor> decode(const std::vector<unsigned char>& bytes);

void save(const std::filesystem::path& path, const std::vector<Tensor>& tensors);
std::vector<Tensor> load(const std::filesystem::path& path);

}  // namespace wahmvc::checkpoint
