#include "evgaze/tensor.hpp"

#include "evgaze/common.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace evgaze {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& dims) {
    if (dims.empty() || dims.size() > 4)
        throw shape_error("tensor rank must be 1..4, got " + std::to_string(dims.size()));
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0)
            throw shape_error("tensor dimension must be nonzero");
        n *= d;
    }
    return n;
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

FrameTensor::FrameTensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), data_(checked_product(dims_), fill) {}

void FrameTensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double FrameTensor::sum() const {
    double s = 0.0;
    for (double v : data_)
        s += v;
    return s;
}

void save_tensor(std::ostream& out, const FrameTensor& t) {
    if (t.rank() == 0)
        throw shape_error("cannot serialize an empty tensor");
    out.write("EETT", 4);
    const unsigned char version = 1;
    const unsigned char rank = static_cast<unsigned char>(t.rank());
    out.put(static_cast<char>(version));
    out.put(static_cast<char>(rank));
    for (std::size_t d : t.dims())
        put_u32_le(out, static_cast<std::uint32_t>(d));
    static_assert(std::endian::native == std::endian::little,
                  "EETT writer assumes a little-endian host");
    std::vector<float> buf(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        buf[i] = static_cast<float>(t[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out)
        throw io_error("failed to write tensor stream");
}

FrameTensor load_tensor(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "EETT", 4) != 0)
        throw io_error("bad tensor file: missing EETT magic");
    const int version = in.get();
    if (version != 1)
        throw io_error("unsupported tensor version " + std::to_string(version));
    const int rank = in.get();
    if (rank < 1 || rank > 4)
        throw io_error("bad tensor rank " + std::to_string(rank));
    std::vector<std::size_t> dims(static_cast<std::size_t>(rank));
    for (auto& d : dims)
        d = get_u32_le(in);
    if (!in)
        throw io_error("truncated tensor header");
    FrameTensor t(dims);
    std::vector<float> buf(t.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in)
        throw io_error("truncated tensor data");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(buf[i]))
            throw io_error("tensor contains non-finite value at index " + std::to_string(i));
        t[i] = static_cast<double>(buf[i]);
    }
    return t;
}

void save_tensor_file(const std::string& path, const FrameTensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("cannot open for writing: " + path);
    save_tensor(out, t);
}

FrameTensor load_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("cannot open: " + path);
    return load_tensor(in);
}

} // namespace evgaze
