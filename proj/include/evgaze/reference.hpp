#pragma once

#include "evgaze/sparse.hpp"
#include "evgaze/tensor.hpp"

#include <vector>

namespace evgaze::ref {

// Serial reference kernels. These stay deliberately naive and independent
// of the OpenMP paths in nn.cpp / sparse.cpp: the test suites compare the
// two routes element-wise and the benchmark times them against each other.

// Dense zero-padded convolution, kernel [C',C,Kh,Kw], plain loops.
FrameTensor conv2d(const FrameTensor& input, const FrameTensor& kernel,
                   const std::vector<double>& bias, int stride_h, int stride_w,
                   int pad_h, int pad_w);

// Dense masked oracle for submanifold convolution: convolve the densified
// frame with zero padding, then keep only the input's active sites, with
// bias applied only there.
FrameTensor submanifold_oracle(const SparseFrame& sf, const FrameTensor& kernel,
                               const std::vector<double>& bias);

// Per-site 1-D temporal convolution over a sequence of frames with K-1
// implicit leading zero frames. weight [C',C,K].
std::vector<FrameTensor> temporal_conv(const std::vector<FrameTensor>& seq,
                                       const FrameTensor& weight,
                                       const std::vector<double>& bias);

} // namespace evgaze::ref
