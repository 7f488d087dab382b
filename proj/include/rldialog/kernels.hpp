#pragma once

#include <cstddef>

namespace rldialog::kernels {

// The dense inner loops of the model (gate matvecs, vocabulary projections,
// gradient outer products) are routed through this layer. Two backends share
// one contract: every output element is accumulated in the same index order,
// so the OpenMP backend is bit-identical to the serial reference regardless
// of thread count. The serial reference stays around for tests and for the
// benchmark target that compares the two.
enum class Backend { Serial, OpenMP };

void set_backend(Backend b);
Backend get_backend();
bool openmp_compiled();

namespace serial {
// y = W x, W row-major (rows x cols).
void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y);
// y += W x
void matvec_acc(const double* W, size_t rows, size_t cols, const double* x, double* y);
// y += W^T x, x has rows elements, y has cols elements.
void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* x, double* y);
// G += a b^T, G row-major (rows x cols), a rows-long, b cols-long.
void outer_acc(double* G, size_t rows, size_t cols, const double* a, const double* b);
// In-place softmax with max subtraction; returns log of the partition sum
// (log sum exp(v_i - max) + max) so callers can form log-probabilities.
double softmax_inplace(double* v, size_t n);
}  // namespace serial

namespace openmp {
void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y);
void matvec_acc(const double* W, size_t rows, size_t cols, const double* x, double* y);
void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* x, double* y);
void outer_acc(double* G, size_t rows, size_t cols, const double* a, const double* b);
double softmax_inplace(double* v, size_t n);
}  // namespace openmp

// Dispatch through the process-wide backend.
void matvec(const double* W, size_t rows, size_t cols, const double* x, double* y);
void matvec_acc(const double* W, size_t rows, size_t cols, const double* x, double* y);
void matvec_t_acc(const double* W, size_t rows, size_t cols, const double* x, double* y);
void outer_acc(double* G, size_t rows, size_t cols, const double* a, const double* b);
double softmax_inplace(double* v, size_t n);

}  // namespace rldialog::kernels
