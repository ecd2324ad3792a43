#pragma once

// Data-parallel inner loops used by the estimators: dot products, axpy and
// the cross-product (Gram) accumulations that build sample covariances and
// regression normal matrices.
//
// Every kernel has a scalar reference version. SIMD variants (AVX2+FMA on
// x86-64, NEON on aarch64) are compiled with per-function target attributes
// and picked at runtime from the CPU feature bits. VARCOV_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace varcov::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend b) noexcept;

bool backend_available(Backend b) noexcept;

/// Backend currently used by the dispatching entry points.
Backend active_backend() noexcept;

/// Switch the dispatch target. Throws Error(InvalidInput) if the CPU lacks it.
/// Not synchronized with concurrent kernel calls; intended for tests and startup.
void set_backend(Backend b);

double dot(std::span<const double> x, std::span<const double> y);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// out = X^T X for a column-major rows x cols block with leading dimension ld.
/// `out` is cols x cols column-major; both triangles are written.
void gram(const double* x, std::size_t rows, std::size_t cols, std::size_t ld, double* out);

/// out = X^T Y; X is rows x xcols (ld ldx), Y is rows x ycols (ld ldy), out is xcols x ycols.
void cross(const double* x, std::size_t xcols, std::size_t ldx,
           const double* y, std::size_t ycols, std::size_t ldy,
           std::size_t rows, double* out);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
}  // namespace neon
#endif

}  // namespace varcov::kernels
