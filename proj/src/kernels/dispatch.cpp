#include "conetest/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace conetest::kernels {

namespace {

Isa initial_isa() noexcept
{
    const char* force = std::getenv("CONETEST_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "0") != 0 && force[0] != '\0') {
        return Isa::Scalar;
    }
    return detected_isa();
}

std::atomic<Isa>& current() noexcept
{
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

Isa detected_isa() noexcept
{
#ifdef CONETEST_HAVE_AVX2_KERNELS
    static const bool has_avx2 = __builtin_cpu_supports("avx2");
    return has_avx2 ? Isa::Avx2 : Isa::Scalar;
#else
    return Isa::Scalar;
#endif
}

Isa active_isa() noexcept
{
    return current().load(std::memory_order_relaxed);
}

void set_active_isa(Isa isa) noexcept
{
    if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) {
        isa = Isa::Scalar;
    }
    current().store(isa, std::memory_order_relaxed);
}

const char* to_string(Isa isa) noexcept
{
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

#ifdef CONETEST_HAVE_AVX2_KERNELS
#define CONETEST_DISPATCH(call)                                                 \
    do {                                                                        \
        if (active_isa() == Isa::Avx2) return avx2::call;                       \
        return scalar::call;                                                    \
    } while (0)
#else
#define CONETEST_DISPATCH(call) return scalar::call
#endif

double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    CONETEST_DISPATCH(dot(a, b));
}

double squared_norm(std::span<const double> a) noexcept
{
    CONETEST_DISPATCH(squared_norm(a));
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept
{
    CONETEST_DISPATCH(axpy(alpha, x, y));
}

PositivePart positive_part(std::span<const double> y) noexcept
{
    CONETEST_DISPATCH(positive_part(y));
}

void split_orthant(std::span<const double> y, std::span<double> negative,
                   std::span<double> positive) noexcept
{
    CONETEST_DISPATCH(split_orthant(y, negative, positive));
}

} // namespace conetest::kernels
