#pragma once
// Data-parallel inner loops used by the projection engine and the simulation
// harness. Every kernel has a scalar reference and an AVX2 variant; the
// variant is selected once at runtime from CPUID.
//
// The scalar reference accumulates in four interleaved lanes and reduces them
// as (l0 + l1) + (l2 + l3) before adding the tail, which is exactly what the
// AVX2 code does. Both translation units are built with -ffp-contract=off, so
// the two paths return bit-identical results.

#include <cstddef>
#include <span>

namespace conetest::kernels {

enum class Isa { Scalar, Avx2 };

struct PositivePart {
    double sum_squares = 0.0; // sum of y_i^2 over y_i > 0
    int count = 0;            // #{i : y_i > 0}
};

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double squared_norm(std::span<const double> a) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
PositivePart positive_part(std::span<const double> y) noexcept;
void split_orthant(std::span<const double> y, std::span<double> negative,
                   std::span<double> positive) noexcept;
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CONETEST_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b) noexcept;
double squared_norm(std::span<const double> a) noexcept;
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
PositivePart positive_part(std::span<const double> y) noexcept;
void split_orthant(std::span<const double> y, std::span<double> negative,
                   std::span<double> positive) noexcept;
} // namespace avx2
#endif

/// Best instruction set supported by the running CPU.
Isa detected_isa() noexcept;

/// ISA the dispatching entry points currently route to. Defaults to
/// detected_isa(); the environment variable CONETEST_FORCE_SCALAR=1 pins the
/// scalar reference.
Isa active_isa() noexcept;

/// Overrides dispatch (tests and benchmarks). Requests for an ISA the CPU
/// lacks fall back to Scalar.
void set_active_isa(Isa isa) noexcept;

const char* to_string(Isa isa) noexcept;

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double squared_norm(std::span<const double> a) noexcept;
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;
PositivePart positive_part(std::span<const double> y) noexcept;
/// negative = min(y, 0), positive = max(y, 0); zeros go to the negative side.
void split_orthant(std::span<const double> y, std::span<double> negative,
                   std::span<double> positive) noexcept;

} // namespace conetest::kernels
