#pragma once

#include <cstddef>
#include <vector>

#include "chronosurv/grid.hpp"

namespace chronosurv::nn {

// Small dense/conv kernels with hand-written exact backprop. All take raw
// weight pointers into the flat parameter store; gradient counterparts
// accumulate (+=) so batch members can share a gradient buffer.

// 3x3 convolution, zero padding 1. Output spatial size floor((n-1)/stride)+1.
// Weights laid out (co, ci, kr, kc), bias (co).
Tensor3 conv2d_forward(const Tensor3& in, const double* w, const double* b, int co, int stride);

// d_in, when non-null, must be zero-initialized to the input shape.
void conv2d_backward(const Tensor3& in, const double* w, int co, int stride,
                     const Tensor3& d_out, double* d_w, double* d_b, Tensor3* d_in);

// Non-overlapping p x p average pooling; spatial dims must be divisible by p.
Tensor3 avgpool_forward(const Tensor3& in, int p);
void avgpool_backward(const Tensor3& d_out, int p, Tensor3& d_in);

// ReLU with the derivative taken as 0 at exactly 0.
void relu_inplace(Tensor3& t);
void relu_inplace(std::vector<double>& v);

// Gate a gradient by the post-activation values (> 0 passes).
void relu_backward_inplace(const Tensor3& post, Tensor3& d);
void relu_backward_inplace(const std::vector<double>& post, std::vector<double>& d);

// Global average pool: per-channel mean over the spatial plane.
std::vector<double> gap_forward(const Tensor3& in);
void gap_backward(const std::vector<double>& d_out, Tensor3& d_in);

// y = W x + b with W row-major (out_dim, in_dim).
void dense_forward(const double* x, const double* w, const double* b, int out_dim, int in_dim,
                   double* y);
// d_x, when non-null, is accumulated into.
void dense_backward(const double* x, const double* w, int out_dim, int in_dim, const double* d_y,
                    double* d_w, double* d_b, double* d_x);

double sigmoid(double x);

}  // namespace chronosurv::nn
