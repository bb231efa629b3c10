#pragma once

// Conventional comparator: root-raised-cosine shaping/matched filtering and a
// symbol-spaced linear MMSE equalizer.

#include <chaosbb/channel.hpp>
#include <chaosbb/fir.hpp>
#include <chaosbb/waveform.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace chaosbb {

struct RrcFilter
{
    double rolloff = 0.25;
    int span = 16;
    int n_c = 8;
    std::vector<double> taps;  // span * n_c + 1, unit energy

    long center() const { return static_cast<long>(taps.size() / 2); }
};

inline double rrc_value(double t, double a)
{
    const double pi = std::numbers::pi;
    if (std::abs(t) < 1e-12)
        return 1.0 - a + 4.0 * a / pi;
    if (std::abs(std::abs(t) - 1.0 / (4.0 * a)) < 1e-9)
        return a / std::sqrt(2.0) *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * a)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * a)));
    const double q = 4.0 * a * t;
    return (std::sin(pi * t * (1.0 - a)) + q * std::cos(pi * t * (1.0 + a))) / (pi * t * (1.0 - q * q));
}

inline RrcFilter rrc_taps(double rolloff, int span, int n_c)
{
    if (!(rolloff > 0.0) || rolloff > 1.0)
        throw std::invalid_argument("rrc_taps: rolloff must lie in (0, 1]");
    if (span < 6 || span % 2 != 0)
        throw std::invalid_argument("rrc_taps: span must be an even integer >= 6");
    if (n_c < 2)
        throw std::invalid_argument("rrc_taps: oversampling rate must be >= 2");
    RrcFilter f{rolloff, span, n_c, {}};
    const int half = span * n_c / 2;
    f.taps.resize(static_cast<std::size_t>(2 * half + 1));
    double energy = 0.0;
    for (int k = -half; k <= half; ++k) {
        const double v = rrc_value(static_cast<double>(k) / n_c, rolloff);
        f.taps[static_cast<std::size_t>(k + half)] = v;
        energy += v * v;
    }
    const double norm = 1.0 / std::sqrt(energy);
    for (double& v : f.taps)
        v *= norm;
    return f;
}

/// Upsampled symbols through the RRC filter. Symbol m peaks at lead + m*n_c.
inline Waveform rrc_shape(std::span<const int> symbols, const RrcFilter& f)
{
    const auto v = detail::checked_bipolar(symbols, "rrc_shape");
    Waveform w;
    w.lead = static_cast<std::size_t>(f.center());
    w.samples.assign(v.size() * f.n_c + f.taps.size() - 1, 0.0);
    for (std::size_t m = 0; m < v.size(); ++m) {
        double* dst = w.samples.data() + m * f.n_c;
        for (std::size_t j = 0; j < f.taps.size(); ++j)
            dst[j] += v[m] * f.taps[j];
    }
    return w;
}

/// Matched-filter output at sample index k (the filter is symmetric).
inline double rrc_matched_at(std::span<const double> rx, const RrcFilter& f, long k)
{
    return correlate_at(rx, f.taps, -f.center(), k);
}

// ---------------------------------------------------------------------------
// Linear MMSE equalizer

struct MmseEqualizer
{
    int length = 15;
    int delay = 7;
    std::vector<double> taps;
    double noise_var = 0.0;
    /// ||(G^T G + s^2 I) w - G^T e_D|| of the solve.
    double residual = 0.0;
};

class MmseError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// w = (G^T G + s^2 I)^{-1} G^T e_D with G the (length + L - 1) x length
/// convolution matrix of the symbol-spaced channel taps g[0..L-1].
inline MmseEqualizer design_mmse(std::span<const double> channel, double noise_var, int length = 15, int delay = 7)
{
    if (channel.empty())
        throw std::invalid_argument("design_mmse: empty channel");
    if (length < 1 || delay < 0 || delay >= length + static_cast<int>(channel.size()) - 1)
        throw std::invalid_argument("design_mmse: decision delay outside the combined response");
    if (!(noise_var >= 0.0))
        throw std::invalid_argument("design_mmse: noise variance must be >= 0");
    const int rows = length + static_cast<int>(channel.size()) - 1;
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rows, length);
    for (int j = 0; j < length; ++j)
        for (std::size_t k = 0; k < channel.size(); ++k)
            G(j + static_cast<int>(k), j) = channel[k];
    Eigen::MatrixXd R = G.transpose() * G;
    R.diagonal().array() += noise_var;
    const Eigen::VectorXd rhs = G.row(delay).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(R);
    if (qr.rank() < length)
        throw MmseError("design_mmse: singular system (zero noise variance and rank-deficient channel)");
    const Eigen::VectorXd w = qr.solve(rhs);

    MmseEqualizer eq;
    eq.length = length;
    eq.delay = delay;
    eq.noise_var = noise_var;
    eq.taps.assign(w.data(), w.data() + w.size());
    eq.residual = (R * w - rhs).norm();
    return eq;
}

/// Symbol-spaced channel taps from an estimate on the integer delay grid.
inline std::vector<double> symbol_channel(const ChannelEstimate& est)
{
    std::vector<double> g;
    for (std::size_t l = 0; l < est.delays.size(); ++l) {
        const double d = est.delays[l];
        if (d < 0.0 || std::abs(d - std::round(d)) > 1e-9)
            throw std::invalid_argument("symbol_channel: MMSE needs non-negative integer symbol delays");
        const auto k = static_cast<std::size_t>(std::lround(d));
        if (g.size() <= k)
            g.resize(k + 1, 0.0);
        g[k] += est.gains[l];
    }
    if (g.empty())
        g.push_back(0.0);
    return g;
}

/// z[n] = sum_j w_j y[n + D - j]: output n estimates symbol n.
inline std::vector<double> apply_equalizer(std::span<const double> y, const MmseEqualizer& eq)
{
    const long n = static_cast<long>(y.size());
    std::vector<double> z(y.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long j = 0; j < eq.length; ++j) {
            const long src = i + eq.delay - j;
            if (src >= 0 && src < n)
                acc += eq.taps[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(src)];
        }
        z[static_cast<std::size_t>(i)] = acc;
    }
    return z;
}

inline std::vector<double> mmse_equalize(std::span<const double> y, const ChannelEstimate& est, int length = 15,
                                         int delay = 7)
{
    return apply_equalizer(y, design_mmse(symbol_channel(est), est.noise_var, length, delay));
}

}  // namespace chaosbb
