#include "rldialog/kernels.hpp"

#include <atomic>
#include <cmath>

namespace rldialog::kernels {

namespace {
std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::OpenMP
#else
    Backend::Serial
#endif
};

// Below this much total work a parallel region costs more than it saves;
// tiny desk-scale models stay on the serial path automatically.
constexpr size_t kParallelWork = 1 << 15;
}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend get_backend() { return g_backend.load(std::memory_order_relaxed); }

bool openmp_compiled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace serial {

void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  for (size_t i = 0; i < rows; ++i) {
    const double* row = W + i * cols;
    double acc = 0.0;
    for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec_acc(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  for (size_t i = 0; i < rows; ++i) {
    const double* row = W + i * cols;
    double acc = 0.0;
    for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  // One output element per column; inner accumulation runs over rows in
  // index order in both backends.
  for (size_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (size_t i = 0; i < rows; ++i) acc += W[i * cols + j] * x[i];
    y[j] += acc;
  }
}

void outer_acc(double* G, size_t rows, size_t cols, const double* a, const double* b) {
  for (size_t i = 0; i < rows; ++i) {
    double* row = G + i * cols;
    const double ai = a[i];
    for (size_t j = 0; j < cols; ++j) row[j] += ai * b[j];
  }
}

double softmax_inplace(double* v, size_t n) {
  double mx = v[0];
  for (size_t i = 1; i < n; ++i) mx = v[i] > mx ? v[i] : mx;
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    v[i] = std::exp(v[i] - mx);
    sum += v[i];
  }
  const double inv = 1.0 / sum;
  for (size_t i = 0; i < n; ++i) v[i] *= inv;
  return std::log(sum) + mx;
}

}  // namespace serial

namespace openmp {

void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (size_t i = 0; i < rows; ++i) {
    const double* row = W + i * cols;
    double acc = 0.0;
    for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
}

void matvec_acc(const double* W, size_t rows, size_t cols, const double* x, double* y) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (size_t i = 0; i < rows; ++i) {
    const double* row = W + i * cols;
    double acc = 0.0;
    for (size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] += acc;
  }
}

void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* x, double* y) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (size_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (size_t i = 0; i < rows; ++i) acc += W[i * cols + j] * x[i];
    y[j] += acc;
  }
}

void outer_acc(double* G, size_t rows, size_t cols, const double* a, const double* b) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelWork)
  for (size_t i = 0; i < rows; ++i) {
    double* row = G + i * cols;
    const double ai = a[i];
    for (size_t j = 0; j < cols; ++j) row[j] += ai * b[j];
  }
}

double softmax_inplace(double* v, size_t n) {
  // Max/sum reductions stay serial to keep the summation order fixed; the
  // exp pass is elementwise and safe to split.
  double mx = v[0];
  for (size_t i = 1; i < n; ++i) mx = v[i] > mx ? v[i] : mx;
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (size_t i = 0; i < n; ++i) v[i] = std::exp(v[i] - mx);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) sum += v[i];
  const double inv = 1.0 / sum;
#pragma omp parallel for schedule(static) if (n >= kParallelWork)
  for (size_t i = 0; i < n; ++i) v[i] *= inv;
  return std::log(sum) + mx;
}

}  // namespace openmp

void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  if (get_backend() == Backend::OpenMP)
    openmp::matvec(W, rows, cols, x, y);
  else
    serial::matvec(W, rows, cols, x, y);
}

void matvec_acc(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  if (get_backend() == Backend::OpenMP)
    openmp::matvec_acc(W, rows, cols, x, y);
  else
    serial::matvec_acc(W, rows, cols, x, y);
}

void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* x, double* y) {
  if (get_backend() == Backend::OpenMP)
    openmp::matvec_t_acc(W, rows, cols, x, y);
  else
    serial::matvec_t_acc(W, rows, cols, x, y);
}

void outer_acc(double* G, size_t rows, size_t cols, const double* a, const double* b) {
  if (get_backend() == Backend::OpenMP)
    openmp::outer_acc(G, rows, cols, a, b);
  else
    serial::outer_acc(G, rows, cols, a, b);
}

double softmax_inplace(double* v, size_t n) {
  if (get_backend() == Backend::OpenMP) return openmp::softmax_inplace(v, n);
  return serial::softmax_inplace(v, n);
}

}  // namespace rldialog::kernels
