#pragma once

#include "evgaze/tensor.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace evgaze {

// Spatially sparse frame: active (y,x) sites sorted lexicographically with
// one C-vector of features per site.
struct SparseFrame {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::pair<int, int>> active_sites; // (y,x), unique, sorted
    std::vector<std::vector<double>> features;     // per site, length = channels
};

// Sites where any channel is nonzero.
SparseFrame to_sparse(const FrameTensor& frame);

FrameTensor densify(const SparseFrame& sf);

// Submanifold convolution: output active set equals the input active set,
// inactive neighbors contribute zero, sites outside the image are clipped.
// kernel dims [C',C,Kh,Kw] with odd Kh, Kw; bias length C'.
// tap_count, when given, receives the number of multiply-accumulate taps
// actually evaluated (bounded by |active| * Kh * Kw * C * C').
SparseFrame submanifold_conv(const SparseFrame& sf, const FrameTensor& kernel,
                             const std::vector<double>& bias,
                             std::uint64_t* tap_count = nullptr);

// Per-channel affine over features only; the active set is unchanged.
SparseFrame sparse_affine(const SparseFrame& sf, const std::vector<double>& scale,
                          const std::vector<double>& shift);

// ReLU over features only; zero results stay active (no re-pruning).
SparseFrame sparse_relu(const SparseFrame& sf);

// Arbitrary per-channel map over features; active set unchanged.
SparseFrame sparse_pointwise(const SparseFrame& sf,
                             const std::function<double(std::size_t, double)>& f);

} // namespace evgaze
