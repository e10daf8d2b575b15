#include "espine/kernels.hpp"

#include <stdexcept>

namespace espine::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] += a * x[i];
}

void xpay(const double* x, double b, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] = x[i] + b * y[i];
}

void vmul(const double* a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] = a[i] * x[i];
}

void vmuladd(const double* a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] += a[i] * x[i];
}

void vmulsub(const double* a, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        y[i] -= a[i] * x[i];
}

} // namespace scalar

#if defined(__x86_64__)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpay(const double* x, double b, double* y, std::size_t n);
void vmul(const double* a, const double* x, double* y, std::size_t n);
void vmuladd(const double* a, const double* x, double* y, std::size_t n);
void vmulsub(const double* a, const double* x, double* y, std::size_t n);
} // namespace avx2
#endif

namespace {

struct Dispatch {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*xpay)(const double*, double, double*, std::size_t);
    void (*vmul)(const double*, const double*, double*, std::size_t);
    void (*vmuladd)(const double*, const double*, double*, std::size_t);
    void (*vmulsub)(const double*, const double*, double*, std::size_t);
};

constexpr Dispatch kScalar = {scalar::dot, scalar::axpy, scalar::xpay,
        scalar::vmul, scalar::vmuladd, scalar::vmulsub};

#if defined(__x86_64__)
constexpr Dispatch kAvx2 = {avx2::dot, avx2::axpy, avx2::xpay, avx2::vmul,
        avx2::vmuladd, avx2::vmulsub};
#endif

bool avx2_supported()
{
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect()
{
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = detect();

const Dispatch& table()
{
#if defined(__x86_64__)
    if (g_backend == Backend::avx2)
        return kAvx2;
#endif
    return kScalar;
}

} // namespace

Backend active_backend()
{
    return g_backend;
}

std::string backend_name(Backend b)
{
    switch (b)
    {
    case Backend::scalar:
        return "scalar";
    case Backend::avx2:
        return "avx2";
    }
    return "unknown";
}

void force_backend(Backend b)
{
    if (b == Backend::avx2 && !avx2_supported())
        throw std::runtime_error("kernels: avx2 backend not supported on this CPU");
    g_backend = b;
}

void reset_backend()
{
    g_backend = detect();
}

double dot(const double* x, const double* y, std::size_t n)
{
    return table().dot(x, y, n);
}

void axpy(double a, const double* x, double* y, std::size_t n)
{
    table().axpy(a, x, y, n);
}

void xpay(const double* x, double b, double* y, std::size_t n)
{
    table().xpay(x, b, y, n);
}

void vmul(const double* a, const double* x, double* y, std::size_t n)
{
    table().vmul(a, x, y, n);
}

void vmuladd(const double* a, const double* x, double* y, std::size_t n)
{
    table().vmuladd(a, x, y, n);
}

void vmulsub(const double* a, const double* x, double* y, std::size_t n)
{
    table().vmulsub(a, x, y, n);
}

} // namespace espine::kernels
