#include "chronosurv/nn.hpp"

#include <cmath>

#include "chronosurv/errors.hpp"

namespace chronosurv::nn {

namespace {
inline int conv_out_dim(int n, int stride) { return (n - 1) / stride + 1; }
}  // namespace

Tensor3 conv2d_forward(const Tensor3& in, const double* w, const double* b, int co, int stride) {
  const int ci = in.ch;
  const int oh = conv_out_dim(in.rows, stride);
  const int ow = conv_out_dim(in.cols, stride);
  Tensor3 out(co, oh, ow);
  for (int oc = 0; oc < co; ++oc) {
    const double* w_oc = w + static_cast<std::size_t>(oc) * ci * 9;
    for (int orow = 0; orow < oh; ++orow) {
      const int r0 = orow * stride - 1;
      for (int ocol = 0; ocol < ow; ++ocol) {
        const int c0 = ocol * stride - 1;
        double acc = b[oc];
        for (int ic = 0; ic < ci; ++ic) {
          const double* w_ic = w_oc + static_cast<std::size_t>(ic) * 9;
          const double* plane = in.v.data() + static_cast<std::size_t>(ic) * in.plane();
          for (int kr = 0; kr < 3; ++kr) {
            const int r = r0 + kr;
            if (r < 0 || r >= in.rows) continue;
            const double* row = plane + static_cast<std::size_t>(r) * in.cols;
            for (int kc = 0; kc < 3; ++kc) {
              const int c = c0 + kc;
              if (c < 0 || c >= in.cols) continue;
              acc += w_ic[kr * 3 + kc] * row[c];
            }
          }
        }
        out.at(oc, orow, ocol) = acc;
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor3& in, const double* w, int co, int stride,
                     const Tensor3& d_out, double* d_w, double* d_b, Tensor3* d_in) {
  const int ci = in.ch;
  for (int oc = 0; oc < co; ++oc) {
    const double* w_oc = w + static_cast<std::size_t>(oc) * ci * 9;
    double* dw_oc = d_w + static_cast<std::size_t>(oc) * ci * 9;
    for (int orow = 0; orow < d_out.rows; ++orow) {
      const int r0 = orow * stride - 1;
      for (int ocol = 0; ocol < d_out.cols; ++ocol) {
        const double g = d_out.at(oc, orow, ocol);
        if (g == 0.0) continue;
        const int c0 = ocol * stride - 1;
        d_b[oc] += g;
        for (int ic = 0; ic < ci; ++ic) {
          const double* plane = in.v.data() + static_cast<std::size_t>(ic) * in.plane();
          double* dw_ic = dw_oc + static_cast<std::size_t>(ic) * 9;
          for (int kr = 0; kr < 3; ++kr) {
            const int r = r0 + kr;
            if (r < 0 || r >= in.rows) continue;
            const double* row = plane + static_cast<std::size_t>(r) * in.cols;
            for (int kc = 0; kc < 3; ++kc) {
              const int c = c0 + kc;
              if (c < 0 || c >= in.cols) continue;
              dw_ic[kr * 3 + kc] += g * row[c];
              if (d_in != nullptr) d_in->at(ic, r, c) += g * w_oc[static_cast<std::size_t>(ic) * 9 + kr * 3 + kc];
            }
          }
        }
      }
    }
  }
}

Tensor3 avgpool_forward(const Tensor3& in, int p) {
  if (p == 1) return in;
  if (in.rows % p != 0 || in.cols % p != 0)
    throw InvalidInputError("avgpool: dims not divisible by pool factor");
  Tensor3 out(in.ch, in.rows / p, in.cols / p);
  const double inv = 1.0 / static_cast<double>(p * p);
  for (int c = 0; c < in.ch; ++c)
    for (int r = 0; r < out.rows; ++r)
      for (int col = 0; col < out.cols; ++col) {
        double acc = 0.0;
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j) acc += in.at(c, r * p + i, col * p + j);
        out.at(c, r, col) = acc * inv;
      }
  return out;
}

void avgpool_backward(const Tensor3& d_out, int p, Tensor3& d_in) {
  if (p == 1) {
    for (std::size_t i = 0; i < d_out.size(); ++i) d_in.v[i] += d_out.v[i];
    return;
  }
  const double inv = 1.0 / static_cast<double>(p * p);
  for (int c = 0; c < d_out.ch; ++c)
    for (int r = 0; r < d_out.rows; ++r)
      for (int col = 0; col < d_out.cols; ++col) {
        const double g = d_out.at(c, r, col) * inv;
        for (int i = 0; i < p; ++i)
          for (int j = 0; j < p; ++j) d_in.at(c, r * p + i, col * p + j) += g;
      }
}

void relu_inplace(Tensor3& t) {
  for (double& v : t.v)
    if (v < 0.0) v = 0.0;
}

void relu_inplace(std::vector<double>& v) {
  for (double& x : v)
    if (x < 0.0) x = 0.0;
}

void relu_backward_inplace(const Tensor3& post, Tensor3& d) {
  for (std::size_t i = 0; i < post.size(); ++i)
    if (post.v[i] <= 0.0) d.v[i] = 0.0;
}

void relu_backward_inplace(const std::vector<double>& post, std::vector<double>& d) {
  for (std::size_t i = 0; i < post.size(); ++i)
    if (post[i] <= 0.0) d[i] = 0.0;
}

std::vector<double> gap_forward(const Tensor3& in) {
  std::vector<double> out(static_cast<std::size_t>(in.ch), 0.0);
  const double inv = 1.0 / static_cast<double>(in.plane());
  for (int c = 0; c < in.ch; ++c) {
    const double* plane = in.v.data() + static_cast<std::size_t>(c) * in.plane();
    double acc = 0.0;
    for (std::size_t i = 0; i < in.plane(); ++i) acc += plane[i];
    out[static_cast<std::size_t>(c)] = acc * inv;
  }
  return out;
}

void gap_backward(const std::vector<double>& d_out, Tensor3& d_in) {
  const double inv = 1.0 / static_cast<double>(d_in.plane());
  for (int c = 0; c < d_in.ch; ++c) {
    const double g = d_out[static_cast<std::size_t>(c)] * inv;
    double* plane = d_in.v.data() + static_cast<std::size_t>(c) * d_in.plane();
    for (std::size_t i = 0; i < d_in.plane(); ++i) plane[i] += g;
  }
}

void dense_forward(const double* x, const double* w, const double* b, int out_dim, int in_dim,
                   double* y) {
  for (int o = 0; o < out_dim; ++o) {
    const double* row = w + static_cast<std::size_t>(o) * in_dim;
    double acc = b[o];
    for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void dense_backward(const double* x, const double* w, int out_dim, int in_dim, const double* d_y,
                    double* d_w, double* d_b, double* d_x) {
  for (int o = 0; o < out_dim; ++o) {
    const double g = d_y[o];
    if (g == 0.0) continue;
    d_b[o] += g;
    const double* row = w + static_cast<std::size_t>(o) * in_dim;
    double* d_row = d_w + static_cast<std::size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) {
      d_row[i] += g * x[i];
      if (d_x != nullptr) d_x[i] += g * row[i];
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace chronosurv::nn
