#pragma once

#include <memory>
#include <vector>

#include "homog/fields.hpp"

namespace homog {

// In-place complex FFT on a d-dimensional grid, row-major with the last axis
// fastest. forward computes sum_y f(y) exp(-2 pi i k.y / n); backward has the
// opposite sign; neither normalizes.
class FftN {
 public:
  FftN(const std::vector<int>& dims);
  ~FftN();
  FftN(const FftN&) = delete;
  FftN& operator=(const FftN&) = delete;

  std::size_t size() const { return size_; }
  const std::vector<int>& dims() const { return dims_; }
  void forward(cplx* data) const;
  void backward(cplx* data) const;

 private:
  struct Impl;
  std::vector<int> dims_;
  std::size_t size_ = 0;
  std::unique_ptr<Impl> impl_;
};

// Real-to-half-complex FFT on an n0 x n1 grid. The spectrum has n0 x (n1/2+1)
// entries. forward is unnormalized; backward is the unnormalized inverse.
class RealFft2 {
 public:
  RealFft2(int n0, int n1);
  ~RealFft2();
  RealFft2(const RealFft2&) = delete;
  RealFft2& operator=(const RealFft2&) = delete;

  int n0() const { return n0_; }
  int n1() const { return n1_; }
  int half() const { return n1_ / 2 + 1; }
  void forward(const double* in, cplx* out) const;
  void backward(const cplx* in, double* out) const;

 private:
  struct Impl;
  int n0_;
  int n1_;
  std::unique_ptr<Impl> impl_;
};

// Signed frequency of FFT index k on an axis of length n.
inline int signed_frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace homog
