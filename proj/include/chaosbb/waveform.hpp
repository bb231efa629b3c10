#pragma once

// Chaotic basis function, FIR synthesis of the chaotic baseband waveform,
// the hybrid oscillator that generates it, and the numerical check that the
// waveform is topologically conjugate to its symbol sequence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chaosbb {

/// Bipolar symbol sequence, every element in {-1, +1}.
using SymbolSeq = std::vector<int>;

struct WaveformParams
{
    double beta = std::numbers::ln2;
    double omega = 2.0 * std::numbers::pi;
    /// Truncation length of the basis function, in symbol periods.
    int n_p = 9;

    void validate() const
    {
        if (!(beta > 0.0) || beta > std::numbers::ln2 + 1e-15)
            throw std::invalid_argument("WaveformParams: beta must lie in (0, ln 2]");
        if (omega != 2.0 * std::numbers::pi)
            throw std::invalid_argument("WaveformParams: omega must equal 2*pi");
        if (n_p < 1)
            throw std::invalid_argument("WaveformParams: n_p must be a positive integer");
    }
};

/// Piecewise basis function p(t); identically zero for t >= 1.
inline double eval_basis(double t, const WaveformParams& wp)
{
    const double b = wp.beta;
    const double w = wp.omega;
    if (t >= 1.0)
        return 0.0;
    const double osc = std::cos(w * t) - (b / w) * std::sin(w * t);
    if (t < 0.0)
        return (1.0 - std::exp(-b)) * std::exp(b * t) * osc;
    return 1.0 - std::exp(b * (t - 1.0)) * osc;
}

/// Largest |p| over one period before -n_p, evaluated on a grid 64 times
/// finer than t = k/n_c. Since the pre-cursor envelope decays by e^{-beta}
/// per period, this bounds |p| for all t < -n_p.
inline double truncation_residual(const WaveformParams& wp, int n_c)
{
    const int n = 64 * n_c;
    double worst = 0.0;
    for (int k = 1; k <= n; ++k)
        worst = std::max(worst, std::abs(eval_basis(-wp.n_p - static_cast<double>(k) / n, wp)));
    return worst;
}

inline double basis_peak(const WaveformParams& wp, int n_c)
{
    const int n = 64 * n_c;
    double peak = 0.0;
    for (int k = -n; k < n; ++k)
        peak = std::max(peak, std::abs(eval_basis(static_cast<double>(k) / n, wp)));
    return peak;
}

/// True when dropping p(t) for t < -n_p discards less than 1e-3 of the peak.
inline bool truncation_ok(const WaveformParams& wp, int n_c)
{
    return truncation_residual(wp, n_c) < 1e-3 * basis_peak(wp, n_c);
}

/// Smallest n_p satisfying truncation_ok for the given beta and grid.
inline int required_truncation(double beta, int n_c)
{
    WaveformParams wp;
    wp.beta = beta;
    for (wp.n_p = 1; wp.n_p < 400; ++wp.n_p)
        if (truncation_ok(wp, n_c))
            return wp.n_p;
    throw std::invalid_argument("required_truncation: beta too small");
}

/// Polyphase shaping filter: phase f in {0, 1/n_c, ...}, tap n = p(f - n_p + n).
struct ShapingTaps
{
    int n_c = 0;
    int n_p = 0;
    std::vector<double> taps;  // row-major, n_c rows of n_p + 1

    double tap(int phase, int n) const { return taps[static_cast<std::size_t>(phase) * (n_p + 1) + n]; }
    std::size_t taps_per_phase() const { return static_cast<std::size_t>(n_p) + 1; }

    /// Samples t = k/n_c for k in [first, last) of sum_m v_m p(t - m). Values
    /// outside the sequence are zero. Accepts arbitrary real weights.
    std::vector<double> apply(std::span<const double> values, long first, long last) const
    {
        std::vector<double> out(static_cast<std::size_t>(std::max(0L, last - first)), 0.0);
        const long len = static_cast<long>(values.size());
        for (long k = first; k < last; ++k) {
            const long j = k >= 0 ? k / n_c : -((-k + n_c - 1) / n_c);
            const int f = static_cast<int>(k - j * n_c);
            const double* row = &taps[static_cast<std::size_t>(f) * (n_p + 1)];
            double acc = 0.0;
            for (int n = 0; n <= n_p; ++n) {
                const long m = j + n_p - n;
                if (m >= 0 && m < len)
                    acc += values[static_cast<std::size_t>(m)] * row[n];
            }
            out[static_cast<std::size_t>(k - first)] = acc;
        }
        return out;
    }
};

inline ShapingTaps shaping_taps(int n_c, const WaveformParams& wp)
{
    wp.validate();
    if (n_c < 2)
        throw std::invalid_argument("shaping_taps: oversampling rate must be >= 2");
    ShapingTaps st;
    st.n_c = n_c;
    st.n_p = wp.n_p;
    st.taps.resize(static_cast<std::size_t>(n_c) * (wp.n_p + 1));
    for (int f = 0; f < n_c; ++f)
        for (int n = 0; n <= wp.n_p; ++n)
            st.taps[static_cast<std::size_t>(f) * (wp.n_p + 1) + n] =
                eval_basis(static_cast<double>(f) / n_c - wp.n_p + n, wp);
    return st;
}

namespace detail {

inline std::vector<double> checked_bipolar(std::span<const int> symbols, const char* who)
{
    if (symbols.empty())
        throw std::invalid_argument(std::string(who) + ": empty symbol sequence");
    std::vector<double> v(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i] != 1 && symbols[i] != -1)
            throw std::invalid_argument(std::string(who) + ": symbol values must be -1 or +1");
        v[i] = symbols[i];
    }
    return v;
}

}  // namespace detail

/// Chaotic waveform sampled at t = k/n_c, k = 0 .. len*n_c - 1.
inline std::vector<double> synth_waveform(std::span<const int> symbols, int n_c, const WaveformParams& wp)
{
    const auto v = detail::checked_bipolar(symbols, "synth_waveform");
    const auto st = shaping_taps(n_c, wp);
    return st.apply(v, 0, static_cast<long>(v.size()) * n_c);
}

/// A sampled baseband signal together with the index of the t = 0 instant
/// of symbol 0.
struct Waveform
{
    std::vector<double> samples;
    std::size_t lead = 0;
};

/// Whole support of the truncated waveform, t in [-n_p, len).
inline Waveform synth_waveform_full(std::span<const int> symbols, int n_c, const WaveformParams& wp)
{
    const auto v = detail::checked_bipolar(symbols, "synth_waveform");
    const auto st = shaping_taps(n_c, wp);
    const long first = -static_cast<long>(wp.n_p) * n_c;
    return {st.apply(v, first, static_cast<long>(v.size()) * n_c), static_cast<std::size_t>(-first)};
}

// ---------------------------------------------------------------------------
// Hybrid oscillator

struct HybridTrajectory
{
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> x_dot;
    std::vector<int> s;
    /// Guard events (x_dot zero crossings), in time order.
    std::vector<double> event_times;
    /// Start of the first symbol interval (an integer-class guard event).
    double symbol_origin = 0.0;
    /// Value of s on [symbol_origin + k, symbol_origin + k + 1).
    SymbolSeq symbols;
};

class HybridError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Integrates x'' - 2 beta x' + (omega^2 + beta^2)(x - s) = 0 with s latched to
/// sgn(x) at every zero crossing of x'. Crossings are refined by bisection to
/// 1e-9 before the switch.
inline HybridTrajectory simulate_hybrid(double x0, double xdot0, double duration, double dt,
                                        const WaveformParams& wp = {})
{
    wp.validate();
    if (!(dt > 0.0) || dt > 1e-3)
        throw std::invalid_argument("simulate_hybrid: dt must lie in (0, 1e-3]");
    if (!(duration >= 1.0))
        throw std::invalid_argument("simulate_hybrid: duration must be >= 1");

    const double b = wp.beta;
    const double k2 = wp.omega * wp.omega + b * b;
    struct State { double x, v; };

    auto rk4 = [&](State st, int s, double h) {
        auto f = [&](const State& q) { return State{q.v, 2.0 * b * q.v - k2 * (q.x - s)}; };
        const State a = f(st);
        const State c = f({st.x + 0.5 * h * a.x, st.v + 0.5 * h * a.v});
        const State d = f({st.x + 0.5 * h * c.x, st.v + 0.5 * h * c.v});
        const State e = f({st.x + h * d.x, st.v + h * d.v});
        return State{st.x + h / 6.0 * (a.x + 2.0 * c.x + 2.0 * d.x + e.x),
                     st.v + h / 6.0 * (a.v + 2.0 * c.v + 2.0 * d.v + e.v)};
    };

    HybridTrajectory tr;
    State st{x0, xdot0};
    int s = x0 < 0.0 ? -1 : 1;
    double t = 0.0;
    const std::size_t reserve = static_cast<std::size_t>(duration / dt) + 16;
    tr.times.reserve(reserve);
    tr.x.reserve(reserve);
    tr.x_dot.reserve(reserve);
    tr.s.reserve(reserve);
    auto record = [&] {
        tr.times.push_back(t);
        tr.x.push_back(st.x);
        tr.x_dot.push_back(st.v);
        tr.s.push_back(s);
    };
    record();

    bool have_origin = false;
    while (t < duration - 1e-12) {
        const double h = std::min(dt, duration - t);
        State next = rk4(st, s, h);
        if (st.v != 0.0 && (next.v == 0.0 || (next.v > 0.0) != (st.v > 0.0))) {
            double lo = 0.0, hi = h;
            const bool positive = st.v > 0.0;
            while (hi - lo > 1e-9) {
                const double mid = 0.5 * (lo + hi);
                const State m = rk4(st, s, mid);
                if (m.v != 0.0 && (m.v > 0.0) == positive)
                    lo = mid;
                else
                    hi = mid;
            }
            next = rk4(st, s, hi);
            const double scale = 1.0 + std::abs(st.v) + k2 * std::abs(st.x - s) * dt;
            if (std::abs(next.v) > 1e-5 * scale)
                throw HybridError("simulate_hybrid: guard crossing could not be bracketed within dt");
            t += hi;
            st = {next.x, 0.0};
            s = st.x < 0.0 ? -1 : 1;
            tr.event_times.push_back(t);
            if (!have_origin && std::abs(st.x) < 1.0) {
                have_origin = true;
                tr.symbol_origin = t;
            }
        } else {
            t += h;
            st = next;
        }
        record();
    }

    // Symbol k is the latched guard value a quarter period into its interval.
    std::size_t idx = 0;
    for (double start = tr.symbol_origin; start + 1.0 <= duration + 1e-9; start += 1.0) {
        const double probe = start + 0.25;
        while (idx + 1 < tr.times.size() && tr.times[idx + 1] <= probe)
            ++idx;
        tr.symbols.push_back(tr.s[idx]);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Conjugacy conditions

struct ConjugacyReport
{
    bool cond1 = false;
    /// min over the grid of 1 - 2|p(t)| / (G 2^{-|t|}); positive means condition 2 holds.
    double cond2_margin = 0.0;
    double integral_inside = 0.0;
    double integral_outside = 0.0;
    bool cond3 = false;
};

inline ConjugacyReport check_conjugacy(const WaveformParams& wp, double grid_step = 1e-4, double bound_g = 5.0)
{
    wp.validate();
    if (!(grid_step > 0.0) || grid_step > 1e-3)
        throw std::invalid_argument("check_conjugacy: grid_step must lie in (0, 1e-3]");

    // p sampled on t = -lower + i*h, i = 0..n, with 1/h rounded so integer
    // shifts of the argument stay on the grid.
    const long per_unit = std::lround(1.0 / grid_step);
    const double h = 1.0 / static_cast<double>(per_unit);
    constexpr long kLower = 40;   // envelope below 1e-12 beyond this
    constexpr long kShift = 3;    // largest symbol offset compared for condition 1
    const long lo_units = kLower + kShift;
    const long n = (lo_units + 1) * per_unit;  // covers [-(kLower + kShift), 1]
    std::vector<double> p(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i)
        p[static_cast<std::size_t>(i)] = eval_basis(-static_cast<double>(lo_units) + static_cast<double>(i) * h, wp);
    auto at = [&](long i) { return i >= 0 && i <= n ? p[static_cast<std::size_t>(i)] : 0.0; };
    const long zero = lo_units * per_unit;

    ConjugacyReport rep;

    auto trapezoid_abs = [&](long from, long to) {
        double acc = 0.0;
        for (long i = from; i < to; ++i)
            acc += 0.5 * (std::abs(at(i)) + std::abs(at(i + 1)));
        return acc * h;
    };
    rep.integral_inside = 2.0 * trapezoid_abs(zero, zero + per_unit);
    rep.integral_outside = 2.0 * trapezoid_abs(zero - kLower * per_unit, zero);
    rep.cond3 = rep.integral_inside > rep.integral_outside;

    double margin = 1.0;
    for (long i = zero - kLower * per_unit; i <= zero + per_unit; ++i) {
        const double t = static_cast<double>(i - zero) * h;
        const double bound = bound_g * std::exp2(-std::abs(t));
        margin = std::min(margin, 1.0 - 2.0 * std::abs(at(i)) / bound);
    }
    rep.cond2_margin = margin;

    // phi_k = s_k p(t - k) against phi_0 = p(t) for k = 1..kShift and both
    // relative signs, over the span where either is nonzero. Equality is
    // tolerated only at isolated grid points.
    bool distinct = true;
    for (long k = 1; k <= kShift && distinct; ++k) {
        for (int sk : {1, -1}) {
            int run = 0;
            for (long i = zero - kLower * per_unit; i <= zero + (k + 1) * per_unit; ++i) {
                const double a = at(i);
                const double bk = sk * at(i - k * per_unit);
                const double scale = std::max(std::abs(a), std::abs(bk));
                const bool equal = std::abs(a - bk) <= 1e-12 * scale || scale == 0.0;
                run = equal ? run + 1 : 0;
                if (run >= 2) {
                    distinct = false;
                    break;
                }
            }
            if (!distinct)
                break;
        }
    }
    rep.cond1 = distinct;
    return rep;
}

}  // namespace chaosbb
