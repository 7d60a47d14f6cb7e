#include "tfscat/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace tfs::fft {
namespace {

struct PlanKey {
  int kind;  // 0 = 1d/many, 1 = 2d
  int sign;
  std::size_t n, count, stride, dist;
  auto tie() const { return std::tie(kind, sign, n, count, stride, dist); }
  bool operator<(const PlanKey& o) const { return tie() < o.tie(); }
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const PlanKey& key) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    // Planning scratch spans the same memory footprint as the caller's data.
    std::size_t extent = key.kind == 1 ? key.n * key.count
                                       : (key.n - 1) * key.stride + (key.count - 1) * key.dist + 1;
    auto* scratch = fftw_alloc_complex(extent);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    if (key.kind == 1) {
      plan = fftw_plan_dft_2d(static_cast<int>(key.n), static_cast<int>(key.count), scratch,
                              scratch, key.sign, flags);
    } else {
      int n = static_cast<int>(key.n);
      plan = fftw_plan_many_dft(1, &n, static_cast<int>(key.count), scratch, nullptr,
                                static_cast<int>(key.stride), static_cast<int>(key.dist),
                                scratch, nullptr, static_cast<int>(key.stride),
                                static_cast<int>(key.dist), key.sign, flags);
    }
    fftw_free(scratch);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void run_many(cplx* data, std::size_t n, std::size_t count, std::size_t stride,
              std::size_t dist, int sign) {
  if (n == 0 || count == 0) return;
  fftw_plan plan = cache().get({0, sign, n, count, stride, dist});
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, p, p);
}

void scale(cplx* data, std::size_t size, double factor) {
  for (std::size_t i = 0; i < size; ++i) data[i] *= factor;
}

}  // namespace

void forward(std::span<cplx> data) { run_many(data.data(), data.size(), 1, 1, 1, FFTW_FORWARD); }

void inverse(std::span<cplx> data) {
  run_many(data.data(), data.size(), 1, 1, 1, FFTW_BACKWARD);
  scale(data.data(), data.size(), 1.0 / static_cast<double>(data.size()));
}

void forward_many(cplx* data, std::size_t n, std::size_t count, std::size_t stride,
                  std::size_t dist) {
  run_many(data, n, count, stride, dist, FFTW_FORWARD);
}

void inverse_many(cplx* data, std::size_t n, std::size_t count, std::size_t stride,
                  std::size_t dist) {
  run_many(data, n, count, stride, dist, FFTW_BACKWARD);
  const double f = 1.0 / static_cast<double>(n);
  for (std::size_t c = 0; c < count; ++c)
    for (std::size_t i = 0; i < n; ++i) data[c * dist + i * stride] *= f;
}

void forward_2d(std::span<cplx> data, std::size_t rows, std::size_t cols) {
  fftw_plan plan = cache().get({1, FFTW_FORWARD, rows, cols, 0, 0});
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
}

void inverse_2d(std::span<cplx> data, std::size_t rows, std::size_t cols) {
  fftw_plan plan = cache().get({1, FFTW_BACKWARD, rows, cols, 0, 0});
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, p, p);
  scale(data.data(), data.size(), 1.0 / static_cast<double>(rows * cols));
}

}  // namespace tfs::fft
