// Compiled with -mavx2 -ffp-contract=off; only reached after a CPUID check.
#include "conetest/kernels.hpp"

#include <immintrin.h>

namespace conetest::kernels::avx2 {

namespace {

inline double reduce_lanes(__m256d v) noexcept
{
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

} // namespace

double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    const std::size_t n = a.size();
    const std::size_t n_vec = n / 4 * 4;
    __m256d acc_v = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n_vec; i += 4) {
        const __m256d av = _mm256_loadu_pd(a.data() + i);
        const __m256d bv = _mm256_loadu_pd(b.data() + i);
        acc_v = _mm256_add_pd(acc_v, _mm256_mul_pd(av, bv));
    }
    double acc = reduce_lanes(acc_v);
    for (std::size_t i = n_vec; i < n; ++i) {
        acc = acc + a[i] * b[i];
    }
    return acc;
}

double squared_norm(std::span<const double> a) noexcept
{
    return dot(a, a);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept
{
    const std::size_t n = x.size();
    const std::size_t n_vec = n / 4 * 4;
    const __m256d alpha_v = _mm256_set1_pd(alpha);
    for (std::size_t i = 0; i < n_vec; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x.data() + i);
        const __m256d yv = _mm256_loadu_pd(y.data() + i);
        _mm256_storeu_pd(y.data() + i, _mm256_add_pd(yv, _mm256_mul_pd(alpha_v, xv)));
    }
    for (std::size_t i = n_vec; i < n; ++i) {
        y[i] = y[i] + alpha * x[i];
    }
}

PositivePart positive_part(std::span<const double> y) noexcept
{
    const std::size_t n = y.size();
    const std::size_t n_vec = n / 4 * 4;
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc_v = _mm256_setzero_pd();
    int count = 0;
    for (std::size_t i = 0; i < n_vec; i += 4) {
        const __m256d yv = _mm256_loadu_pd(y.data() + i);
        const __m256d mask = _mm256_cmp_pd(yv, zero, _CMP_GT_OQ);
        const __m256d pos = _mm256_and_pd(mask, yv);
        acc_v = _mm256_add_pd(acc_v, _mm256_mul_pd(pos, pos));
        count += __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(mask)));
    }
    double acc = reduce_lanes(acc_v);
    for (std::size_t i = n_vec; i < n; ++i) {
        if (y[i] > 0.0) {
            acc = acc + y[i] * y[i];
            ++count;
        }
    }
    return {acc, count};
}

void split_orthant(std::span<const double> y, std::span<double> negative,
                   std::span<double> positive) noexcept
{
    const std::size_t n = y.size();
    const std::size_t n_vec = n / 4 * 4;
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n_vec; i += 4) {
        const __m256d yv = _mm256_loadu_pd(y.data() + i);
        const __m256d mask = _mm256_cmp_pd(yv, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(positive.data() + i, _mm256_and_pd(mask, yv));
        _mm256_storeu_pd(negative.data() + i, _mm256_andnot_pd(mask, yv));
    }
    for (std::size_t i = n_vec; i < n; ++i) {
        const bool pos = y[i] > 0.0;
        positive[i] = pos ? y[i] : 0.0;
        negative[i] = pos ? 0.0 : y[i];
    }
}

} // namespace conetest::kernels::avx2
