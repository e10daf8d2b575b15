#pragma once

#include <cstddef>
#include <string>

// Data-parallel double-precision kernels used by the resistive-network
// solver and the map post-processing loops. A scalar reference
// implementation always exists; on x86-64 an AVX2+FMA variant is selected
// at runtime when the CPU supports it. The two variants are
// equivalence-tested against each other.
namespace espine::kernels {

enum class Backend { scalar, avx2 };

// Backend chosen by runtime CPU detection (or a forced override).
Backend active_backend();
std::string backend_name(Backend b);

// Override dispatch, e.g. to pin the scalar reference in tests.
// Throws std::runtime_error if the requested backend is unsupported here.
void force_backend(Backend b);
void reset_backend();

// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);

// y += a*x
void axpy(double a, const double* x, double* y, std::size_t n);

// y = x + b*y
void xpay(const double* x, double b, double* y, std::size_t n);

// y = a .* x   (elementwise)
void vmul(const double* a, const double* x, double* y, std::size_t n);

// y += a .* x
void vmuladd(const double* a, const double* x, double* y, std::size_t n);

// y -= a .* x
void vmulsub(const double* a, const double* x, double* y, std::size_t n);

} // namespace espine::kernels
