#include "conetest/kernels.hpp"

namespace conetest::kernels::scalar {

namespace {
constexpr std::size_t kLanes = 4;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    const std::size_t n = a.size();
    const std::size_t n_vec = n / kLanes * kLanes;
    double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n_vec; i += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            lane[l] = lane[l] + a[i + l] * b[i + l];
        }
    }
    double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
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
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = y[i] + alpha * x[i];
    }
}

PositivePart positive_part(std::span<const double> y) noexcept
{
    const std::size_t n = y.size();
    const std::size_t n_vec = n / kLanes * kLanes;
    double lane[kLanes] = {0.0, 0.0, 0.0, 0.0};
    int count = 0;
    for (std::size_t i = 0; i < n_vec; i += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
            const double v = y[i + l] > 0.0 ? y[i + l] : 0.0;
            lane[l] = lane[l] + v * v;
            count += y[i + l] > 0.0;
        }
    }
    double acc = (lane[0] + lane[1]) + (lane[2] + lane[3]);
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
    for (std::size_t i = 0; i < y.size(); ++i) {
        const bool pos = y[i] > 0.0;
        positive[i] = pos ? y[i] : 0.0;
        negative[i] = pos ? 0.0 : y[i];
    }
}

} // namespace conetest::kernels::scalar
