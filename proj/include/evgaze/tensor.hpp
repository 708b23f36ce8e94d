#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace evgaze {

// Dense row-major tensor, rank 1..4. Values are kept in double precision
// internally; the on-disk EETT format stores float32 little-endian.
class FrameTensor {
public:
    FrameTensor() = default;
    explicit FrameTensor(std::vector<std::size_t> dims, double fill = 0.0);

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Row-major accessors; rank must match the overload used.
    double& at(std::size_t i0, std::size_t i1) {
        assert(rank() == 2);
        return data_[i0 * dims_[1] + i1];
    }
    double at(std::size_t i0, std::size_t i1) const {
        assert(rank() == 2);
        return data_[i0 * dims_[1] + i1];
    }
    double& at(std::size_t i0, std::size_t i1, std::size_t i2) {
        assert(rank() == 3);
        return data_[(i0 * dims_[1] + i1) * dims_[2] + i2];
    }
    double at(std::size_t i0, std::size_t i1, std::size_t i2) const {
        assert(rank() == 3);
        return data_[(i0 * dims_[1] + i1) * dims_[2] + i2];
    }
    double& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
        assert(rank() == 4);
        return data_[((i0 * dims_[1] + i1) * dims_[2] + i2) * dims_[3] + i3];
    }
    double at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
        assert(rank() == 4);
        return data_[((i0 * dims_[1] + i1) * dims_[2] + i2) * dims_[3] + i3];
    }

    void fill(double v);
    double sum() const;
    bool same_dims(const FrameTensor& other) const { return dims_ == other.dims_; }

    bool operator==(const FrameTensor& other) const {
        return dims_ == other.dims_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

// EETT container: magic "EETT", u8 version = 1, u8 rank, rank x u32 LE dims,
// then product(dims) float32 LE values in row-major order.
void save_tensor(std::ostream& out, const FrameTensor& t);
void save_tensor_file(const std::string& path, const FrameTensor& t);
FrameTensor load_tensor(std::istream& in);
FrameTensor load_tensor_file(const std::string& path);

} // namespace evgaze
