#include "homog/fft.hpp"

#include <cstring>
#include <mutex>

#include <fftw3.h>

namespace homog {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct FftN::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

FftN::FftN(const std::vector<int>& dims) : dims_(dims), impl_(std::make_unique<Impl>()) {
  if (dims.empty()) throw InvalidArgument("FftN: empty grid");
  size_ = 1;
  for (int n : dims) {
    if (n < 1) throw InvalidArgument("FftN: grid sizes must be positive");
    size_ *= static_cast<std::size_t>(n);
  }
  std::vector<cplx> probe(size_);
  auto* p = reinterpret_cast<fftw_complex*>(probe.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  impl_->fwd = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), p, p, FFTW_FORWARD, flags);
  impl_->bwd = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), p, p, FFTW_BACKWARD, flags);
}

FftN::~FftN() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

void FftN::forward(cplx* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(impl_->fwd, p, p);
}

void FftN::backward(cplx* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(impl_->bwd, p, p);
}

struct RealFft2::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

RealFft2::RealFft2(int n0, int n1) : n0_(n0), n1_(n1), impl_(std::make_unique<Impl>()) {
  if (n0 < 2 || n1 < 2) throw InvalidArgument("RealFft2: grid sizes must be at least 2");
  std::vector<double> r(static_cast<std::size_t>(n0) * n1);
  std::vector<cplx> c(static_cast<std::size_t>(n0) * half());
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  impl_->fwd = fftw_plan_dft_r2c_2d(n0, n1, r.data(), cp, flags);
  impl_->bwd = fftw_plan_dft_c2r_2d(n0, n1, cp, r.data(), flags | FFTW_DESTROY_INPUT);
}

RealFft2::~RealFft2() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
}

void RealFft2::forward(const double* in, cplx* out) const {
  fftw_execute_dft_r2c(impl_->fwd, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void RealFft2::backward(const cplx* in, double* out) const {
  thread_local std::vector<cplx> scratch;
  const std::size_t n = static_cast<std::size_t>(n0_) * half();
  scratch.resize(n);
  std::memcpy(static_cast<void*>(scratch.data()), in, n * sizeof(cplx));
  fftw_execute_dft_c2r(impl_->bwd, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

}  // namespace homog
