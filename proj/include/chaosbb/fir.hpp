#pragma once

// Small FIR helpers shared by the transmitter and receiver.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace chaosbb {

/// Full linear convolution, length a + b - 1.
inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            out[i + j] += a[i] * b[j];
    return out;
}

/// Centered filtering of an odd-length linear-phase FIR: the group delay of
/// (taps - 1)/2 samples is removed, output length equals input length.
inline std::vector<double> filter_centered(std::span<const double> x, std::span<const double> taps)
{
    if (taps.size() % 2 == 0)
        throw std::invalid_argument("filter_centered: need an odd tap count");
    const long c = static_cast<long>(taps.size() / 2);
    const long n = static_cast<long>(x.size());
    std::vector<double> y(x.size(), 0.0);
    for (long k = 0; k < n; ++k) {
        double acc = 0.0;
        for (long j = 0; j < static_cast<long>(taps.size()); ++j) {
            const long i = k + c - j;
            if (i >= 0 && i < n)
                acc += taps[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(i)];
        }
        y[static_cast<std::size_t>(k)] = acc;
    }
    return y;
}

/// sum_j kernel[j] x[index + offset + j], samples outside x taken as zero.
inline double correlate_at(std::span<const double> x, std::span<const double> kernel, long offset, long index)
{
    const long n = static_cast<long>(x.size());
    const long base = index + offset;
    const long j0 = std::max(0L, -base);
    const long j1 = std::min(static_cast<long>(kernel.size()), n - base);
    double acc = 0.0;
    for (long j = j0; j < j1; ++j)
        acc += kernel[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(base + j)];
    return acc;
}

/// Hamming-windowed sinc low-pass, cutoff in cycles per sample, unit DC gain.
inline std::vector<double> lowpass_taps(double cutoff, int n_taps)
{
    if (!(cutoff > 0.0) || !(cutoff < 0.5))
        throw std::invalid_argument("lowpass_taps: cutoff must lie in (0, 0.5) cycles/sample");
    if (n_taps < 3 || n_taps % 2 == 0)
        throw std::invalid_argument("lowpass_taps: tap count must be odd and >= 3");
    std::vector<double> h(static_cast<std::size_t>(n_taps));
    const double mid = 0.5 * (n_taps - 1);
    double sum = 0.0;
    for (int i = 0; i < n_taps; ++i) {
        const double n = i - mid;
        const double x = 2.0 * cutoff * n;
        const double sinc = n == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        const double win = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n_taps - 1));
        h[static_cast<std::size_t>(i)] = 2.0 * cutoff * sinc * win;
        sum += h[static_cast<std::size_t>(i)];
    }
    for (double& v : h)
        v /= sum;
    return h;
}

/// First frequency (cycles/sample) above the spectral peak where |H(f)|^2
/// falls 10 dB below that peak. Evaluated on a uniform grid of `points`.
inline double ten_db_bandwidth(std::span<const double> impulse, int points = 8192)
{
    if (impulse.empty())
        throw std::invalid_argument("ten_db_bandwidth: empty impulse response");
    std::vector<double> psd(static_cast<std::size_t>(points) + 1);
    for (int i = 0; i <= points; ++i) {
        const double f = 0.5 * i / points;
        std::complex<double> acc = 0.0;
        const std::complex<double> step = std::polar(1.0, -2.0 * std::numbers::pi * f);
        std::complex<double> rot = 1.0;
        for (double h : impulse) {
            acc += h * rot;
            rot *= step;
        }
        psd[static_cast<std::size_t>(i)] = std::norm(acc);
    }
    std::size_t peak = 0;
    for (std::size_t i = 1; i < psd.size(); ++i)
        if (psd[i] > psd[peak])
            peak = i;
    for (std::size_t i = peak; i < psd.size(); ++i)
        if (psd[i] < 0.1 * psd[peak])
            return 0.5 * static_cast<double>(i) / points;
    return 0.5;
}

}  // namespace chaosbb
