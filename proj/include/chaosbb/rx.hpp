#pragma once

// Receiver: downconversion, chaotic matched filter, frame sync, symbol
// sampling, LS channel estimation, ISI-cancelling thresholds and decisions.

#include <chaosbb/channel.hpp>
#include <chaosbb/fir.hpp>
#include <chaosbb/theory.hpp>
#include <chaosbb/tx.hpp>
#include <chaosbb/waveform.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace chaosbb {

// ---------------------------------------------------------------------------
// Downconversion

struct LpfSpec
{
    int taps = 65;
    /// Cutoff in cycles per sample.
    double cutoff = 0.1;

    /// Cutoff at `factor` times the 10 dB bandwidth of a baseband pulse.
    static LpfSpec for_pulse(std::span<const double> pulse, double factor = 1.5, int taps = 65)
    {
        return {taps, std::min(0.49, factor * ten_db_bandwidth(pulse))};
    }
};

/// y_i = 2 LPF(y cos w0 m), y_q = 2 LPF(y sin w0 m), group delay removed.
inline std::pair<std::vector<double>, std::vector<double>> downconvert(std::span<const double> y,
                                                                        const CarrierConfig& c, const LpfSpec& lpf)
{
    c.validate();
    const auto h = lowpass_taps(lpf.cutoff, lpf.taps);
    const double w0 = c.omega0();
    std::vector<double> mi(y.size()), mq(y.size());
    for (std::size_t m = 0; m < y.size(); ++m) {
        const double ph = w0 * static_cast<double>(m);
        mi[m] = 2.0 * y[m] * std::cos(ph);
        mq[m] = 2.0 * y[m] * std::sin(ph);
    }
    return {filter_centered(mi, h), filter_centered(mq, h)};
}

// ---------------------------------------------------------------------------
// Matched filter

/// g(t) = p(-t) in polyphase form: phase f, tap m = g(u_f + m) with
/// u_f = f/n_c - ceil(f/n_c), m = 0..n_p.
struct MatchedFilterTaps
{
    int n_c = 0;
    int n_p = 0;
    std::vector<double> taps;  // row-major, n_c rows of n_p + 1
    /// Flat correlation kernel p(j/n_c - n_p)/n_c, j = 0 .. (n_p + 1) n_c - 1.
    std::vector<double> kernel;

    double tap(int phase, int m) const { return taps[static_cast<std::size_t>(phase) * (n_p + 1) + m]; }
    long kernel_offset() const { return -static_cast<long>(n_p) * n_c; }
    /// Sum of squared kernel coefficients: the noise gain of the filter.
    double noise_gain() const
    {
        double e = 0.0;
        for (double k : kernel)
            e += k * k;
        return e;
    }
};

inline MatchedFilterTaps matched_filter_taps(int n_c, const WaveformParams& wp)
{
    wp.validate();
    if (n_c < 2)
        throw std::invalid_argument("matched_filter_taps: oversampling rate must be >= 2");
    MatchedFilterTaps mf;
    mf.n_c = n_c;
    mf.n_p = wp.n_p;
    mf.taps.resize(static_cast<std::size_t>(n_c) * (wp.n_p + 1));
    for (int f = 0; f < n_c; ++f) {
        const double u = f == 0 ? 0.0 : static_cast<double>(f) / n_c - 1.0;
        for (int m = 0; m <= wp.n_p; ++m)
            mf.taps[static_cast<std::size_t>(f) * (wp.n_p + 1) + m] = eval_basis(-(u + m), wp);
    }
    const int len = (wp.n_p + 1) * n_c;
    mf.kernel.resize(static_cast<std::size_t>(len));
    for (int j = 0; j < len; ++j)
        mf.kernel[static_cast<std::size_t>(j)] = eval_basis(static_cast<double>(j) / n_c - wp.n_p, wp) / n_c;
    return mf;
}

/// y_C at sample k: (1/n_c) sum_d x[k + d] p(d/n_c), i.e. the input
/// correlated with the basis function anchored at k.
inline double matched_filter_at(std::span<const double> x, const MatchedFilterTaps& mf, long k)
{
    return correlate_at(x, mf.kernel, mf.kernel_offset(), k);
}

inline std::vector<double> matched_filter(std::span<const double> x, const MatchedFilterTaps& mf)
{
    std::vector<double> y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        y[k] = matched_filter_at(x, mf, static_cast<long>(k));
    return y;
}

// ---------------------------------------------------------------------------
// Synchronization and sampling

struct SyncResult
{
    long offset = 0;
    double peak = 0.0;
    double second = 0.0;
    bool ok = false;

    double ratio() const { return second > 0.0 ? peak / second : (peak > 0.0 ? INFINITY : 0.0); }
};

/// Normalized cross-correlation of `rx` against `reference` over offsets
/// [0, search). The runner-up is taken outside +-exclusion of the peak so
/// that delayed copies of the same frame do not count against it.
inline SyncResult frame_sync(std::span<const double> rx, std::span<const double> reference, long search,
                             long exclusion, double min_ratio = 1.5)
{
    if (reference.empty() || search <= 0)
        throw std::invalid_argument("frame_sync: empty reference or search window");
    double ref_energy = 0.0;
    for (double v : reference)
        ref_energy += v * v;
    const double ref_norm = std::sqrt(ref_energy);
    std::vector<double> score(static_cast<std::size_t>(search), 0.0);
    for (long o = 0; o < search; ++o) {
        double dot = 0.0, e = 0.0;
        for (std::size_t k = 0; k < reference.size(); ++k) {
            const std::size_t idx = static_cast<std::size_t>(o) + k;
            if (idx >= rx.size())
                break;
            dot += rx[idx] * reference[k];
            e += rx[idx] * rx[idx];
        }
        score[static_cast<std::size_t>(o)] = e > 0.0 ? dot / (ref_norm * std::sqrt(e)) : 0.0;
    }
    SyncResult r;
    for (long o = 0; o < search; ++o)
        if (score[static_cast<std::size_t>(o)] > r.peak) {
            r.peak = score[static_cast<std::size_t>(o)];
            r.offset = o;
        }
    for (long o = 0; o < search; ++o)
        if (std::abs(o - r.offset) > exclusion)
            r.second = std::max(r.second, std::abs(score[static_cast<std::size_t>(o)]));
    r.ok = r.peak > 0.0 && r.ratio() >= min_ratio;
    return r;
}

/// y(n) = filtered(offset + n n_c), n = 0..count-1.
inline std::vector<double> sample_symbols(std::span<const double> filtered, long offset, int n_c, std::size_t count)
{
    if (offset < 0 || n_c < 1 || (count > 0 && offset + static_cast<long>(count - 1) * n_c >=
                                                   static_cast<long>(filtered.size())))
        throw std::out_of_range("sample_symbols: symbol instants fall outside the filtered signal");
    std::vector<double> y(count);
    for (std::size_t n = 0; n < count; ++n)
        y[n] = filtered[static_cast<std::size_t>(offset + static_cast<long>(n) * n_c)];
    return y;
}

/// Matched filter evaluated only at the symbol instants offset + n n_c.
inline std::vector<double> matched_symbols(std::span<const double> x, const MatchedFilterTaps& mf, long offset,
                                           std::size_t count)
{
    std::vector<double> y(count);
    for (std::size_t n = 0; n < count; ++n)
        y[n] = matched_filter_at(x, mf, offset + static_cast<long>(n) * mf.n_c);
    return y;
}

// ---------------------------------------------------------------------------
// LS channel estimation

class EstimationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct LsOptions
{
    /// Candidate path delays 0..max_delay (symbol periods).
    int max_delay = 3;
    /// Paths below this fraction of the strongest are dropped.
    double detect = 0.05;
    /// Training rows this close to the data are not used (unknown data ISI).
    int guard = 20;
};

/// One training rail as seen at the matched-filter output.
struct TrainingObservation
{
    std::span<const double> y;      // received samples, one per symbol
    std::span<const int> training;  // known symbols, occupying indices 0..size-1
};

/// Least squares on the integer delay grid. The regressor of delay d at
/// row n is sum_m s_m kernel(n - m - d), so the fit is directly in path
/// gains; detected paths are refitted alone and the residual gives the noise
/// variance.
inline ChannelEstimate estimate_channel_ls(std::span<const TrainingObservation> rails,
                                           const std::function<double(int)>& kernel, const LsOptions& opt = {})
{
    if (rails.empty())
        throw std::invalid_argument("estimate_channel_ls: no training observations");
    if (opt.max_delay < 0)
        throw std::invalid_argument("estimate_channel_ls: negative delay search");
    const int reach = 48;
    std::vector<int> rows_per_rail;
    int total_rows = 0;
    for (const auto& r : rails) {
        const int n_tr = static_cast<int>(r.training.size());
        const int rows = std::min<int>(n_tr - opt.guard, static_cast<int>(r.y.size()));
        rows_per_rail.push_back(std::max(rows, 0));
        total_rows += std::max(rows, 0);
    }
    const int unknowns = opt.max_delay + 1;
    if (total_rows < 4 * unknowns)
        throw EstimationError("estimate_channel_ls: training too short for the delay search");

    std::vector<double> ker(static_cast<std::size_t>(2 * reach + 1));
    for (int k = -reach; k <= reach; ++k)
        ker[static_cast<std::size_t>(k + reach)] = kernel(k);

    Eigen::MatrixXd M(total_rows, unknowns);
    Eigen::VectorXd y(total_rows);
    int row = 0;
    for (std::size_t ri = 0; ri < rails.size(); ++ri) {
        const auto& r = rails[ri];
        const int n_tr = static_cast<int>(r.training.size());
        for (int n = 0; n < rows_per_rail[ri]; ++n, ++row) {
            y(row) = r.y[static_cast<std::size_t>(n)];
            for (int d = 0; d < unknowns; ++d) {
                double acc = 0.0;
                for (int k = -reach; k <= reach; ++k) {
                    const int m = n - d - k;
                    if (m >= 0 && m < n_tr)
                        acc += r.training[static_cast<std::size_t>(m)] * ker[static_cast<std::size_t>(k + reach)];
                }
                M(row, d) = acc;
            }
        }
    }

    auto solve = [&](const std::vector<int>& cols, Eigen::VectorXd& coef) {
        Eigen::MatrixXd A(total_rows, static_cast<int>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c)
            A.col(static_cast<int>(c)) = M.col(cols[c]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        if (qr.rank() < static_cast<int>(cols.size()))
            throw EstimationError("estimate_channel_ls: training matrix is rank deficient");
        coef = qr.solve(y);
        return (y - A * coef).squaredNorm();
    };

    std::vector<int> all(static_cast<std::size_t>(unknowns));
    for (int d = 0; d < unknowns; ++d)
        all[static_cast<std::size_t>(d)] = d;
    Eigen::VectorXd full;
    const double full_rss = solve(all, full);
    const double peak = full.cwiseAbs().maxCoeff();
    std::vector<int> keep;
    for (int d = 0; d < unknowns; ++d)
        if (std::abs(full(d)) >= opt.detect * peak && peak > 0.0)
            keep.push_back(d);
    if (keep.empty())
        keep.push_back(0);

    Eigen::VectorXd coef;
    const double rss = solve(keep, coef);
    ChannelEstimate est;
    for (std::size_t c = 0; c < keep.size(); ++c) {
        est.delays.push_back(keep[c]);
        est.gains.push_back(coef(static_cast<int>(c)));
    }
    const int dof = std::max(1, total_rows - static_cast<int>(keep.size()));
    est.noise_var = rss / dof;
    est.fit_residual = full_rss / total_rows;
    return est;
}

// ---------------------------------------------------------------------------
// Thresholds and decisions

/// theta_n = sum_{k != 0} s_{n-k} c[k] over every symbol of the frame.
inline std::vector<double> threshold_optimal(std::span<const int> symbols, const CompositeResponse& c)
{
    const long n = static_cast<long>(symbols.size());
    std::vector<double> th(symbols.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = c.lo(); k <= c.hi(); ++k) {
            const long m = i - k;
            if (k != 0 && m >= 0 && m < n)
                acc += symbols[static_cast<std::size_t>(m)] * c(k);
        }
        th[static_cast<std::size_t>(i)] = acc;
    }
    return th;
}

/// Past-symbol window of the suboptimal threshold, 5 + ceil(tau_max) long.
class ThresholdState
{
public:
    ThresholdState(const ChannelEstimate& est, const WaveformParams& wp)
        : estimate_(est), c_(est.delays, est.gains, wp)
    {
        window_ = 5 + static_cast<int>(std::ceil(est.max_delay() - 1e-12));
        past_.assign(static_cast<std::size_t>(window_), 0);
    }

    int window() const { return window_; }
    const ChannelEstimate& estimate() const { return estimate_; }
    const CompositeResponse& response() const { return c_; }

    /// theta = sum_{k=1}^{W} s_{n-k} c[k] over the stored past decisions.
    double threshold() const
    {
        double acc = 0.0;
        for (int k = 1; k <= window_; ++k)
            acc += past(k) * c_(k);
        return acc;
    }

    /// Symbol decided k steps ago (k = 1 is the most recent).
    int past(int k) const
    {
        return past_[static_cast<std::size_t>((head_ - k + 2 * window_) % window_)];
    }

    void push(int s)
    {
        past_[static_cast<std::size_t>(head_)] = s;
        head_ = (head_ + 1) % window_;
    }

private:
    ChannelEstimate estimate_;
    CompositeResponse c_;
    int window_ = 0;
    std::vector<int> past_;
    int head_ = 0;
};

inline double threshold_suboptimal(const ThresholdState& state)
{
    return state.threshold();
}

inline int decide(double y, double theta)
{
    return y >= theta ? 1 : -1;
}

/// Decision-directed decoding of symbols [first, last) after priming the
/// window with the known symbols [0, first).
inline SymbolSeq decode_suboptimal(std::span<const double> y, std::span<const int> known, std::size_t first,
                                   std::size_t last, ThresholdState& state)
{
    if (last > y.size() || first > known.size() || first > last)
        throw std::out_of_range("decode_suboptimal: range outside the observation");
    for (std::size_t n = 0; n < first; ++n)
        state.push(known[n]);
    SymbolSeq out;
    out.reserve(last - first);
    for (std::size_t n = first; n < last; ++n) {
        const int s = decide(y[n], state.threshold());
        out.push_back(s);
        state.push(s);
    }
    return out;
}

}  // namespace chaosbb
