#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "cnnrom/nn/tensor.hpp"

namespace cnnrom::io {

/// Binary tensor file: "ROMT", u16 version, u8 dtype, u8 ndim, u64 dims,
/// row-major payload. Everything little-endian.
enum class Dtype : std::uint8_t { F64 = 0, F32 = 1, U8 = 2, U64 = 3 };

std::size_t dtype_size(Dtype d);

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RomtArray {
    Dtype dtype = Dtype::F64;
    std::vector<std::uint64_t> dims;
    std::vector<std::uint8_t> payload;

    std::uint64_t numel() const;
    friend bool operator==(const RomtArray&, const RomtArray&) = default;
};

void write_romt(std::ostream& os, const RomtArray& a);
/// Throws FormatError on a bad magic, unknown version or dtype, or truncation.
RomtArray read_romt(std::istream& is);

void save_romt(const std::filesystem::path& path, const RomtArray& a);
RomtArray load_romt(const std::filesystem::path& path);

/// F32 and U8 encodings round; U8 requires values already in [0, 255].
RomtArray encode(const nn::Tensor& t, Dtype dtype = Dtype::F64);
/// Accepts F64, F32 and U8 payloads. Throws FormatError for U64.
nn::Tensor decode(const RomtArray& a);

RomtArray encode_u64(std::span<const std::uint64_t> values);
/// Throws FormatError unless the payload is U64.
std::vector<std::uint64_t> decode_u64(const RomtArray& a);

void save_tensor(const std::filesystem::path& path, const nn::Tensor& t, Dtype dtype = Dtype::F64);
nn::Tensor load_tensor(const std::filesystem::path& path);

}  // namespace cnnrom::io
