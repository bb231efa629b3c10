#pragma once

// Closed forms: the shaping/matched-filter cascade r(t - tau) for one path,
// erfc, and the analytic BER with optimal and suboptimal thresholds.

#include <chaosbb/channel.hpp>
#include <chaosbb/waveform.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace chaosbb {

struct ResponseParams
{
    double A = 0.0;
    double B = 0.0;
    double beta = 0.0;
    double omega = 0.0;
};

inline ResponseParams response_params(const WaveformParams& wp)
{
    const double b = wp.beta;
    const double w = wp.omega;
    const double q = w * w + b * b;
    return {(w * w - 3.0 * b * b) / (4.0 * b * q), (3.0 * w * w - b * b) / (4.0 * w * q), b, w};
}

/// alpha * (p * g)(t - tau). The cascade is an autocorrelation and therefore
/// even; the closed form is evaluated at |t - tau|.
inline double response_r(double t, double tau, double alpha, const WaveformParams& wp)
{
    const auto rp = response_params(wp);
    const double b = rp.beta;
    const double x = std::abs(t - tau);
    const double d = std::exp(-b * x);
    const double c = std::cos(rp.omega * x);
    const double s = std::sin(rp.omega * x);
    const double em = std::exp(-b);
    if (x >= 1.0)
        return alpha * d * (2.0 - em - std::exp(b)) * (rp.A * c + rp.B * s);
    return alpha * (rp.A * (d * (2.0 - em) - em / d) * c + rp.B * (d * (2.0 - em) + em / d) * s + 1.0 - x);
}

/// Complementary error function; absolute error below 1e-15 on |x| < 30.
inline double erfc(double x)
{
    if (std::isnan(x))
        return x;
    if (x < 0.0)
        return 2.0 - erfc(-x);
    if (x < 1.5) {
        // erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!
        const double x2 = x * x;
        double term = x;
        double sum = x;
        for (int n = 1; n < 200; ++n) {
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
            if (term < 1e-17 * sum)
                break;
        }
        return 1.0 - 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x2) * sum;
    }
    if (x > 27.3)
        return 0.0;
    // Continued fraction x + (1/2)/(x + 1/(x + (3/2)/(x + ...))), modified Lentz.
    constexpr double tiny = 1e-300;
    double f = x;
    double c = x;
    double d = 0.0;
    for (int n = 1; n < 5000; ++n) {
        const double a = 0.5 * n;
        d = x + a * d;
        if (d == 0.0)
            d = tiny;
        c = x + a / c;
        if (c == 0.0)
            c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16)
            break;
    }
    // exp(-x^2) with x^2 split so the large part is exact
    const double xh = std::trunc(x * 16.0) / 16.0;
    const double ex = std::exp(-xh * xh) * std::exp(-(x - xh) * (x + xh));
    return ex / (std::sqrt(std::numbers::pi) * f);
}

inline double ber_optimal(double total_power, double sigma_w)
{
    return 0.5 * erfc(total_power / std::sqrt(2.0 * sigma_w * sigma_w));
}

struct BerInputs
{
    double P = 0.0;
    double sigma_w = 0.0;
    double K = 0.0;
    double z1 = 0.0;
    double z2 = 0.0;
};

/// Expected-symbol amplitude sum_l r(-tau_l).
inline double total_power(const MultipathSpec& ch, const WaveformParams& wp)
{
    double P = 0.0;
    for (std::size_t l = 0; l < ch.paths(); ++l)
        P += response_r(0.0, ch.delays()[l], ch.gains()[l], wp);
    return P;
}

/// ISI constant of the suboptimal-threshold BER, as printed (negative for beta = ln 2).
inline double isi_constant(const MultipathSpec& ch, const WaveformParams& wp)
{
    const auto rp = response_params(wp);
    const double b = wp.beta;
    const double w = wp.omega;
    double K = 0.0;
    for (std::size_t l = 0; l < ch.paths(); ++l) {
        const double tau = ch.delays()[l];
        K += ch.gains()[l] * (2.0 - std::exp(-b) - std::exp(b)) * std::exp(-b * tau) *
             (rp.A * std::cos(w * tau) + rp.B * std::sin(w * tau));
    }
    return K;
}

inline BerInputs ber_inputs(const MultipathSpec& ch, double sigma_w, const WaveformParams& wp)
{
    BerInputs in;
    in.P = total_power(ch, wp);
    in.sigma_w = sigma_w;
    in.K = isi_constant(ch, wp);
    const double spread = std::abs(in.K) / (std::exp(wp.beta) - 1.0);
    const double root = std::sqrt(2.0 * sigma_w * sigma_w);
    in.z1 = (in.P + spread) / root;
    in.z2 = (in.P - spread) / root;
    return in;
}

inline double ber_suboptimal(const MultipathSpec& ch, double sigma_w, const WaveformParams& wp)
{
    const auto in = ber_inputs(ch, sigma_w, wp);
    if (std::abs(in.K) < 1e-8)
        return ber_optimal(in.P, sigma_w);
    const double root = std::sqrt(2.0 * sigma_w * sigma_w);
    const double sp = std::sqrt(std::numbers::pi);
    const double bracket = in.z1 * erfc(in.z1) - in.z2 * erfc(in.z2) - std::exp(-in.z1 * in.z1) / sp +
                           std::exp(-in.z2 * in.z2) / sp;
    return root * (std::exp(wp.beta) - 1.0) / (4.0 * std::abs(in.K)) * bracket;
}

/// Symbol-spaced composite response c[k] = sum_l r(k - tau_l), kept over the
/// lags where it exceeds the truncation floor.
class CompositeResponse
{
public:
    CompositeResponse(const MultipathSpec& ch, const WaveformParams& wp, double floor = 1e-9)
        : CompositeResponse(ch.delays(), ch.gains(), wp, floor)
    {
    }

    /// Arbitrary path set, e.g. an estimate whose first detected path is not at 0.
    CompositeResponse(std::span<const double> delays, std::span<const double> gains, const WaveformParams& wp,
                      double floor = 1e-9)
    {
        if (delays.size() != gains.size())
            throw std::invalid_argument("CompositeResponse: need one gain per delay");
        const auto rp = response_params(wp);
        const double b = wp.beta;
        const double amp = std::abs(2.0 - std::exp(-b) - std::exp(b)) * std::hypot(rp.A, rp.B);
        double gain_sum = 0.0;
        double dmin = 0.0, dmax = 0.0;
        for (std::size_t l = 0; l < delays.size(); ++l) {
            gain_sum += std::abs(gains[l]);
            dmin = std::min(dmin, delays[l]);
            dmax = std::max(dmax, delays[l]);
        }
        // |r(x)| <= amp e^{-beta |x|} for |x| >= 1
        int reach = 1;
        while (gain_sum * amp * std::exp(-b * reach) >= floor)
            ++reach;
        lo_ = -reach + static_cast<int>(std::floor(dmin));
        hi_ = reach + static_cast<int>(std::ceil(dmax));
        c_.assign(static_cast<std::size_t>(hi_ - lo_ + 1), 0.0);
        for (int k = lo_; k <= hi_; ++k)
            for (std::size_t l = 0; l < delays.size(); ++l)
                c_[static_cast<std::size_t>(k - lo_)] += response_r(k, delays[l], gains[l], wp);
    }

    int lo() const { return lo_; }
    int hi() const { return hi_; }
    double operator()(int k) const { return k < lo_ || k > hi_ ? 0.0 : c_[static_cast<std::size_t>(k - lo_)]; }
    double peak() const { return (*this)(0); }

private:
    int lo_ = 0;
    int hi_ = 0;
    std::vector<double> c_;
};

}  // namespace chaosbb
