#include "varcov/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "varcov/error.hpp"

namespace varcov::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace scalar

namespace {

struct Table {
    Backend backend;
    double (*dot)(const double*, const double*, std::size_t) noexcept;
    void (*axpy)(double, const double*, double*, std::size_t) noexcept;
};

constexpr Table kScalar{Backend::Scalar, &scalar::dot, &scalar::axpy};
#if defined(__x86_64__) || defined(_M_X64)
constexpr Table kAvx2{Backend::Avx2, &avx2::dot, &avx2::axpy};
#endif
#if defined(__aarch64__)
constexpr Table kNeon{Backend::Neon, &neon::dot, &neon::axpy};
#endif

const Table* table_for(Backend b) noexcept {
    switch (b) {
        case Backend::Scalar: return &kScalar;
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::Avx2: return &kAvx2;
#endif
#if defined(__aarch64__)
        case Backend::Neon: return &kNeon;
#endif
        default: return nullptr;
    }
}

const Table* detect() noexcept {
    if (const char* env = std::getenv("VARCOV_SIMD")) {
        if (std::string(env) == "scalar") return &kScalar;
    }
    if (backend_available(Backend::Avx2)) return table_for(Backend::Avx2);
    if (backend_available(Backend::Neon)) return table_for(Backend::Neon);
    return &kScalar;
}

std::atomic<const Table*>& current() noexcept {
    static std::atomic<const Table*> t{detect()};
    return t;
}

}  // namespace

std::string_view to_string(Backend b) noexcept {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "unknown";
}

bool backend_available(Backend b) noexcept {
    switch (b) {
        case Backend::Scalar: return true;
        case Backend::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() noexcept { return current().load(std::memory_order_acquire)->backend; }

void set_backend(Backend b) {
    if (!backend_available(b)) {
        throw Error(ErrorKind::InvalidInput,
                    "SIMD backend '" + std::string(to_string(b)) + "' is not available on this CPU");
    }
    current().store(table_for(b), std::memory_order_release);
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::InvalidInput, "dot: length mismatch");
    return current().load(std::memory_order_acquire)->dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw Error(ErrorKind::InvalidInput, "axpy: length mismatch");
    current().load(std::memory_order_acquire)->axpy(a, x.data(), y.data(), x.size());
}

void gram(const double* x, std::size_t rows, std::size_t cols, std::size_t ld, double* out) {
    const auto* k = current().load(std::memory_order_acquire);
    for (std::size_t j = 0; j < cols; ++j) {
        const double* xj = x + j * ld;
        for (std::size_t i = j; i < cols; ++i) {
            const double v = k->dot(x + i * ld, xj, rows);
            out[i + j * cols] = v;
            out[j + i * cols] = v;
        }
    }
}

void cross(const double* x, std::size_t xcols, std::size_t ldx,
           const double* y, std::size_t ycols, std::size_t ldy,
           std::size_t rows, double* out) {
    const auto* k = current().load(std::memory_order_acquire);
    for (std::size_t j = 0; j < ycols; ++j) {
        const double* yj = y + j * ldy;
        for (std::size_t i = 0; i < xcols; ++i) {
            out[i + j * xcols] = k->dot(x + i * ldx, yj, rows);
        }
    }
}

}  // namespace varcov::kernels
