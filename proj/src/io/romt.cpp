#include "cnnrom/io/romt.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace cnnrom::io {

static_assert(std::endian::native == std::endian::little, "ROMT payloads are copied as little-endian");

namespace {

constexpr char kMagic[4] = {'R', 'O', 'M', 'T'};
constexpr std::uint16_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const char* what)
{
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw FormatError(std::string("ROMT: truncated ") + what);
    }
    return v;
}

}  // namespace

std::size_t dtype_size(Dtype d)
{
    switch (d) {
    case Dtype::F64: return 8;
    case Dtype::F32: return 4;
    case Dtype::U8: return 1;
    case Dtype::U64: return 8;
    }
    throw FormatError("ROMT: unknown dtype " + std::to_string(static_cast<int>(d)));
}

std::uint64_t RomtArray::numel() const
{
    std::uint64_t n = 1;
    for (const std::uint64_t d : dims) {
        n *= d;
    }
    return n;
}

void write_romt(std::ostream& os, const RomtArray& a)
{
    if (a.dims.size() > 255) {
        throw std::invalid_argument("ROMT: at most 255 dimensions");
    }
    if (a.payload.size() != a.numel() * dtype_size(a.dtype)) {
        throw std::invalid_argument("ROMT: payload size does not match dims");
    }
    os.write(kMagic, 4);
    put<std::uint16_t>(os, kVersion);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(a.dtype));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(a.dims.size()));
    for (const std::uint64_t d : a.dims) {
        put<std::uint64_t>(os, d);
    }
    os.write(reinterpret_cast<const char*>(a.payload.data()), static_cast<std::streamsize>(a.payload.size()));
    if (!os) {
        throw std::runtime_error("ROMT: write failed");
    }
}

RomtArray read_romt(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4)) {
        throw FormatError("ROMT: truncated header");
    }
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("ROMT: bad magic");
    }
    const auto version = get<std::uint16_t>(is, "header");
    if (version != kVersion) {
        throw FormatError("ROMT: unsupported version " + std::to_string(version));
    }
    RomtArray a;
    const auto dtype = get<std::uint8_t>(is, "header");
    if (dtype > 3) {
        throw FormatError("ROMT: unknown dtype " + std::to_string(dtype));
    }
    a.dtype = static_cast<Dtype>(dtype);
    const auto ndim = get<std::uint8_t>(is, "header");
    for (int i = 0; i < ndim; ++i) {
        a.dims.push_back(get<std::uint64_t>(is, "dims"));
    }
    const std::uint64_t bytes = a.numel() * dtype_size(a.dtype);
    a.payload.resize(bytes);
    if (bytes > 0 && !is.read(reinterpret_cast<char*>(a.payload.data()), static_cast<std::streamsize>(bytes))) {
        throw FormatError("ROMT: truncated payload");
    }
    return a;
}

void save_romt(const std::filesystem::path& path, const RomtArray& a)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_romt(os, a);
}

RomtArray load_romt(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open " + path.string());
    }
    try {
        RomtArray a = read_romt(is);
        if (is.peek() != std::char_traits<char>::eof()) {
            throw FormatError("ROMT: trailing bytes");
        }
        return a;
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

RomtArray encode(const nn::Tensor& t, Dtype dtype)
{
    RomtArray a;
    a.dtype = dtype;
    for (const std::int64_t d : t.shape()) {
        a.dims.push_back(static_cast<std::uint64_t>(d));
    }
    const auto n = static_cast<std::size_t>(t.size());
    a.payload.resize(n * dtype_size(dtype));
    switch (dtype) {
    case Dtype::F64:
        if (n > 0) {
            std::memcpy(a.payload.data(), t.data(), a.payload.size());
        }
        break;
    case Dtype::F32:
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = static_cast<float>(t.data()[i]);
            std::memcpy(a.payload.data() + 4 * i, &v, 4);
        }
        break;
    case Dtype::U8:
        for (std::size_t i = 0; i < n; ++i) {
            const double v = t.data()[i];
            if (!(v >= 0.0 && v <= 255.0)) {
                throw std::invalid_argument("ROMT: u8 encoding needs values in [0, 255]");
            }
            a.payload[i] = static_cast<std::uint8_t>(std::lround(v));
        }
        break;
    case Dtype::U64:
        throw std::invalid_argument("ROMT: use encode_u64 for integer payloads");
    }
    return a;
}

nn::Tensor decode(const RomtArray& a)
{
    nn::Shape shape;
    for (const std::uint64_t d : a.dims) {
        shape.push_back(static_cast<std::int64_t>(d));
    }
    nn::Tensor t(shape);
    const auto n = static_cast<std::size_t>(a.numel());
    switch (a.dtype) {
    case Dtype::F64:
        if (n > 0) {
            std::memcpy(t.data(), a.payload.data(), n * 8);
        }
        break;
    case Dtype::F32:
        for (std::size_t i = 0; i < n; ++i) {
            float v;
            std::memcpy(&v, a.payload.data() + 4 * i, 4);
            t.data()[i] = v;
        }
        break;
    case Dtype::U8:
        for (std::size_t i = 0; i < n; ++i) {
            t.data()[i] = a.payload[i];
        }
        break;
    case Dtype::U64:
        throw FormatError("ROMT: expected a floating-point tensor, found u64");
    }
    return t;
}

RomtArray encode_u64(std::span<const std::uint64_t> values)
{
    RomtArray a;
    a.dtype = Dtype::U64;
    a.dims = {values.size()};
    a.payload.resize(values.size() * 8);
    if (!values.empty()) {
        std::memcpy(a.payload.data(), values.data(), a.payload.size());
    }
    return a;
}

std::vector<std::uint64_t> decode_u64(const RomtArray& a)
{
    if (a.dtype != Dtype::U64) {
        throw FormatError("ROMT: expected a u64 tensor");
    }
    std::vector<std::uint64_t> v(static_cast<std::size_t>(a.numel()));
    if (!v.empty()) {
        std::memcpy(v.data(), a.payload.data(), v.size() * 8);
    }
    return v;
}

void save_tensor(const std::filesystem::path& path, const nn::Tensor& t, Dtype dtype)
{
    save_romt(path, encode(t, dtype));
}

nn::Tensor load_tensor(const std::filesystem::path& path)
{
    return decode(load_romt(path));
}

}  // namespace cnnrom::io
