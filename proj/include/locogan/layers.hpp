#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "locogan/errors.hpp"
#include "locogan/geometry.hpp"

namespace locogan {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Kernel layouts
//   transposed: (k*k*out) x in, row (ky*k + kx)*out + c_out
//   regular:    out x (k*k*in), column (ky*k + kx)*in + c_in
// Both keep every tap of one channel pair in a single matrix entry, so the
// spectral norm of the regular layout equals that of the usual (out, in*k*k)
// reshape up to a column permutation.

inline Eigen::Index kernel_rows(const LayerSpec& s) {
  return s.transposed ? Eigen::Index(s.kernel) * s.kernel * s.out_channels : s.out_channels;
}
inline Eigen::Index kernel_cols(const LayerSpec& s) {
  return s.transposed ? s.in_channels : Eigen::Index(s.kernel) * s.kernel * s.in_channels;
}

template <typename Scalar>
Grid<Scalar> conv_transpose_forward(const Matrix<Scalar>& kernel, const Vector<Scalar>& bias, const Grid<Scalar>& x,
                                    const LayerSpec& s) {
  const int out_h = static_cast<int>(layer_output_size(x.height, s));
  const int out_w = static_cast<int>(layer_output_size(x.width, s));
  const int co = s.out_channels, k = s.kernel;
  const Matrix<Scalar> cols = kernel * x.values;
  Grid<Scalar> y(co, out_h, out_w);
  y.values.colwise() = bias;
  for (int iy = 0; iy < x.height; ++iy)
    for (int ky = 0; ky < k; ++ky) {
      const int oy = iy * s.stride - s.padding + ky;
      if (oy < 0 || oy >= out_h) continue;
      for (int ix = 0; ix < x.width; ++ix) {
        const Eigen::Index i = Eigen::Index(iy) * x.width + ix;
        for (int kx = 0; kx < k; ++kx) {
          const int ox = ix * s.stride - s.padding + kx;
          if (ox < 0 || ox >= out_w) continue;
          y.values.col(Eigen::Index(oy) * out_w + ox) += cols.block(Eigen::Index(ky * k + kx) * co, i, co, 1);
        }
      }
    }
  return y;
}

/// Accumulates kernel and bias gradients; writes the input gradient when `dx` is non-null.
template <typename Scalar>
void conv_transpose_backward(const Matrix<Scalar>& kernel, const Grid<Scalar>& x, const Grid<Scalar>& dy,
                             const LayerSpec& s, Matrix<Scalar>& dkernel, Vector<Scalar>& dbias, Grid<Scalar>* dx) {
  const int co = s.out_channels, k = s.kernel;
  Matrix<Scalar> dcols = Matrix<Scalar>::Zero(kernel.rows(), x.pixels());
  for (int iy = 0; iy < x.height; ++iy)
    for (int ky = 0; ky < k; ++ky) {
      const int oy = iy * s.stride - s.padding + ky;
      if (oy < 0 || oy >= dy.height) continue;
      for (int ix = 0; ix < x.width; ++ix) {
        const Eigen::Index i = Eigen::Index(iy) * x.width + ix;
        for (int kx = 0; kx < k; ++kx) {
          const int ox = ix * s.stride - s.padding + kx;
          if (ox < 0 || ox >= dy.width) continue;
          dcols.block(Eigen::Index(ky * k + kx) * co, i, co, 1) = dy.values.col(Eigen::Index(oy) * dy.width + ox);
        }
      }
    }
  dkernel.noalias() += dcols * x.values.transpose();
  dbias += dy.values.rowwise().sum();
  if (dx) {
    dx->height = x.height;
    dx->width = x.width;
    dx->values.noalias() = kernel.transpose() * dcols;
  }
}

template <typename Scalar>
Matrix<Scalar> im2col(const Grid<Scalar>& x, const LayerSpec& s, int out_h, int out_w) {
  const int ci = x.channels(), k = s.kernel;
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(Eigen::Index(k) * k * ci, Eigen::Index(out_h) * out_w);
  for (int oy = 0; oy < out_h; ++oy)
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * s.stride - s.padding + ky;
      if (iy < 0 || iy >= x.height) continue;
      for (int ox = 0; ox < out_w; ++ox)
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * s.stride - s.padding + kx;
          if (ix < 0 || ix >= x.width) continue;
          cols.block(Eigen::Index(ky * k + kx) * ci, Eigen::Index(oy) * out_w + ox, ci, 1) =
              x.values.col(Eigen::Index(iy) * x.width + ix);
        }
    }
  return cols;
}

template <typename Scalar>
Grid<Scalar> conv_forward(const Matrix<Scalar>& kernel, const Vector<Scalar>& bias, const Grid<Scalar>& x,
                          const LayerSpec& s) {
  const int out_h = static_cast<int>(layer_output_size(x.height, s));
  const int out_w = static_cast<int>(layer_output_size(x.width, s));
  Grid<Scalar> y;
  y.height = out_h;
  y.width = out_w;
  y.values.noalias() = kernel * im2col(x, s, out_h, out_w);
  y.values.colwise() += bias;
  return y;
}

template <typename Scalar>
void conv_backward(const Matrix<Scalar>& kernel, const Grid<Scalar>& x, const Grid<Scalar>& dy, const LayerSpec& s,
                   Matrix<Scalar>& dkernel, Vector<Scalar>& dbias, Grid<Scalar>* dx) {
  const int ci = x.channels(), k = s.kernel;
  dkernel.noalias() += dy.values * im2col(x, s, dy.height, dy.width).transpose();
  dbias += dy.values.rowwise().sum();
  if (!dx) return;
  const Matrix<Scalar> dcols = kernel.transpose() * dy.values;
  *dx = Grid<Scalar>(ci, x.height, x.width);
  for (int oy = 0; oy < dy.height; ++oy)
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * s.stride - s.padding + ky;
      if (iy < 0 || iy >= x.height) continue;
      for (int ox = 0; ox < dy.width; ++ox)
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * s.stride - s.padding + kx;
          if (ix < 0 || ix >= x.width) continue;
          dx->values.col(Eigen::Index(iy) * x.width + ix) +=
              dcols.block(Eigen::Index(ky * k + kx) * ci, Eigen::Index(oy) * dy.width + ox, ci, 1);
        }
    }
}

template <typename Scalar>
struct SpectralResult {
  Matrix<Scalar> weight;
  Vector<Scalar> u;
  Vector<Scalar> v;
  Scalar sigma = 0;
};

/// Power iteration v <- W^T u / |W^T u|, u <- W v / |W v|, then sigma = u^T W v.
template <typename Scalar>
SpectralResult<Scalar> spectral_normalize(const Matrix<Scalar>& weight, const Vector<Scalar>& u, int iterations) {
  if (iterations < 1) throw DomainError("spectral_normalize needs at least one iteration");
  if (u.size() != weight.rows()) throw ShapeMismatch("power-iteration vector does not match weight rows");
  if (weight.cwiseAbs().maxCoeff() == Scalar(0)) throw DegenerateMatrix("spectral norm of an all-zero weight");
  SpectralResult<Scalar> r;
  r.u = u;
  if (!(r.u.norm() > Scalar(0))) r.u = Vector<Scalar>::Ones(weight.rows());
  r.u.normalize();
  for (int it = 0; it < iterations; ++it) {
    r.v = weight.transpose() * r.u;
    if (!(r.v.norm() > Scalar(0))) {
      // u is orthogonal to the row space; restart from a generic direction.
      r.u = Vector<Scalar>::Ones(weight.rows()) + Vector<Scalar>::LinSpaced(weight.rows(), 0, 1);
      r.u.normalize();
      r.v = weight.transpose() * r.u;
    }
    r.v.normalize();
    r.u = weight * r.v;
    r.u.normalize();
  }
  r.sigma = r.u.dot(weight * r.v);
  r.weight = weight / r.sigma;
  return r;
}

/// Gradient with respect to W of a loss on W / (u^T W v), with u and v held fixed.
template <typename Scalar>
Matrix<Scalar> spectral_backward(const Matrix<Scalar>& weight, const Vector<Scalar>& u, const Vector<Scalar>& v,
                                 Scalar sigma, const Matrix<Scalar>& d_normalized) {
  const Scalar inner = (d_normalized.array() * weight.array()).sum();
  return d_normalized / sigma - (inner / (sigma * sigma)) * (u * v.transpose());
}

}  // namespace locogan
