#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace popsim::detail {

namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, int>;

struct PlanCache {
  std::mutex mutex;
  std::map<PlanKey, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_plan plan_for(std::complex<double>* data, std::size_t n, std::size_t howmany,
                   std::size_t stride, std::size_t dist, FftSign sign) {
  PlanCache& c = cache();
  std::lock_guard lock(c.mutex);
  PlanKey key{n, howmany, stride, dist, static_cast<int>(sign)};
  auto it = c.plans.find(key);
  if (it != c.plans.end()) return it->second;
  int len = static_cast<int>(n);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  // FFTW_ESTIMATE leaves the data untouched while planning.
  fftw_plan p = fftw_plan_many_dft(1, &len, static_cast<int>(howmany), buf, nullptr,
                                   static_cast<int>(stride), static_cast<int>(dist), buf, nullptr,
                                   static_cast<int>(stride), static_cast<int>(dist),
                                   static_cast<int>(sign), FFTW_ESTIMATE | FFTW_UNALIGNED);
  c.plans.emplace(key, p);
  return p;
}

}  // namespace

void fft_many(std::complex<double>* data, std::size_t n, std::size_t howmany, std::size_t stride,
              std::size_t dist, FftSign sign) {
  fftw_plan p = plan_for(data, n, howmany, stride, dist, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, buf, buf);
}

void centered_dft_many(std::complex<double>* data, std::size_t n, std::size_t howmany,
                       std::size_t stride, std::size_t dist, FftSign sign, double scale) {
  auto alternate = [&](double s) {
    for (std::size_t h = 0; h < howmany; ++h) {
      std::complex<double>* seq = data + h * dist;
      for (std::size_t j = 0; j < n; ++j) seq[j * stride] *= (j % 2 == 0 ? s : -s);
    }
  };
  alternate(1.0);
  fft_many(data, n, howmany, stride, dist, sign);
  alternate(scale);
}

}  // namespace popsim::detail
