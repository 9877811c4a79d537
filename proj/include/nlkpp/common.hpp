#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace nlkpp {

inline constexpr const char* kVersion = "0.1.0";

/// Bad problem definition (config, parameters). CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solver did not produce a usable answer (divergence, non-convergence,
/// sentinel breach). CLI exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int wrap_index(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

inline double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Dot product with a fixed 4-lane summation order. The order is part of the
/// artifact's determinism contract, so do not "simplify" to std::inner_product.
inline double dot4(const double* w, const double* u, int len) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int j = 0;
  for (; j + 4 <= len; j += 4) {
    s0 += w[j] * u[j];
    s1 += w[j + 1] * u[j + 1];
    s2 += w[j + 2] * u[j + 2];
    s3 += w[j + 3] * u[j + 3];
  }
  for (; j < len; ++j) s0 += w[j] * u[j];
  return (s0 + s1) + (s2 + s3);
}

/// out[i] = sum_j w[j] * u_ext[i + j], i = 0..n-1.
/// j-outer / i-inner so the compiler can vectorize without reassociating any
/// single accumulation chain; each out[i] is summed in j order.
inline void convolve_valid(const double* w, int len_w, const double* u_ext,
                           double* out, int n) {
  std::fill(out, out + n, 0.0);
  constexpr int kBlock = 1024;
  for (int i0 = 0; i0 < n; i0 += kBlock) {
    const int i1 = std::min(n, i0 + kBlock);
    for (int j = 0; j < len_w; ++j) {
      const double wj = w[j];
      if (wj == 0.0) continue;
      const double* up = u_ext + i0 + j;
      double* op = out + i0;
      for (int i = 0; i < i1 - i0; ++i) op[i] += wj * up[i];
    }
  }
}

/// Static-partition parallel map over [0, n). Each item writes its own slot,
/// so results do not depend on scheduling.
inline void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, n));
  if (n_threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += n_threads) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

/// FNV-1a over a byte string; used for config hashes in manifests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace nlkpp
