#include "tspec/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <type_traits>

namespace tspec {

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TOEPLITZ_SPECTRA_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min<int>(static_cast<int>(worker_count()), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex guard;
  auto run = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorKind::precondition, "fit_line", "need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.slope_stderr = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return f;
}

namespace {

template <class Vec>
TopSingular lanczos(const std::function<Vec(const Vec&)>& gram, int dim, int max_steps, double tolerance,
                    std::uint64_t seed) {
  using Mat = Eigen::Matrix<typename Vec::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  TopSingular out;
  if (dim == 0) return out;
  const int steps = std::min(max_steps, dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Mat q(dim, steps + 1);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    if constexpr (std::is_same_v<typename Vec::Scalar, cplx>) v(i) = cplx(normal(rng), normal(rng));
    else v(i) = normal(rng);
  }
  q.col(0) = v.normalized();
  std::vector<double> alpha, beta;
  double previous = 0.0;
  for (int k = 0; k < steps; ++k) {
    Vec r = gram(q.col(k));
    alpha.push_back(std::real(q.col(k).dot(r)));
    for (int pass = 0; pass < 2; ++pass) r -= q.leftCols(k + 1) * (q.leftCols(k + 1).adjoint() * r);
    const double b = r.norm();
    RMatrix t = RMatrix::Zero(k + 1, k + 1);
    for (int i = 0; i <= k; ++i) {
      t(i, i) = alpha[i];
      if (i < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    const double top = Eigen::SelfAdjointEigenSolver<RMatrix>(t, Eigen::EigenvaluesOnly).eigenvalues()(k);
    out.iterations = k + 1;
    out.value = std::sqrt(std::max(top, 0.0));
    const bool invariant = b <= 1e-14 * std::max(top, 1e-300);
    if ((k > 0 && std::abs(top - previous) <= tolerance * top) || invariant) {
      out.converged = true;
      break;
    }
    previous = top;
    beta.push_back(b);
    q.col(k + 1) = r / b;
  }
  return out;
}

}  // namespace

TopSingular lanczos_top_singular(const std::function<CVector(const CVector&)>& gram, int dim, int max_steps,
                                 double tolerance, std::uint64_t seed) {
  return lanczos(gram, dim, max_steps, tolerance, seed);
}

TopSingular lanczos_top_singular_real(const std::function<RVector(const RVector&)>& gram, int dim, int max_steps,
                                      double tolerance, std::uint64_t seed) {
  return lanczos(gram, dim, max_steps, tolerance, seed);
}

}  // namespace tspec
