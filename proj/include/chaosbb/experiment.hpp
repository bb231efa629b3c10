#pragma once

// Seeded Monte Carlo runner. Frames are the unit of work: every frame owns
// an RNG stream derived from (master seed, point, frame, family), workers
// pull frame indices from a shared counter, and per-frame counts are summed
// in index order, so results do not depend on the worker count.

#include <chaosbb/channel.hpp>
#include <chaosbb/config.hpp>
#include <chaosbb/random.hpp>
#include <chaosbb/rrc.hpp>
#include <chaosbb/rx.hpp>
#include <chaosbb/theory.hpp>
#include <chaosbb/tx.hpp>

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace chaosbb {

struct BerRecord
{
    std::string method;
    std::string channel;
    double ebn0_db = 0.0;
    long long bits = 0;
    long long errors = 0;
    double ber = 0.0;
    double ci95 = 0.0;

    bool operator==(const BerRecord&) const = default;
};

inline BerRecord make_record(std::string method, std::string channel, double ebn0_db, long long bits,
                             long long errors)
{
    BerRecord r{std::move(method), std::move(channel), ebn0_db, bits, errors, 0.0, 0.0};
    if (bits > 0) {
        r.ber = static_cast<double>(errors) / static_cast<double>(bits);
        r.ci95 = 1.96 * std::sqrt(r.ber * (1.0 - r.ber) / static_cast<double>(bits));
    }
    return r;
}

/// Per-point estimation statistics of a quasi-static sweep.
struct EstimationStats
{
    std::string family;
    std::string channel;
    double ebn0_db = 0.0;
    int frames = 0;
    int sync_failures = 0;
    int estimation_failures = 0;
    /// Mean and maximum over frames of the RMS gain error on the delay grid.
    double gain_rms_mean = 0.0;
    double gain_rms_max = 0.0;
    /// Mean of estimated / true post-filter noise variance.
    double noise_ratio_mean = 0.0;
};

enum class Stage { frame, shape, channel, filter, estimate, decide, count_ };

inline const char* stage_name(Stage s)
{
    constexpr const char* names[] = {"frame", "shape", "channel", "filter", "estimate", "decide"};
    return names[static_cast<int>(s)];
}

/// Wall-clock accumulation per pipeline stage (summed over workers).
class StageClock
{
public:
    void add(Stage s, std::chrono::steady_clock::duration d)
    {
        ns_[static_cast<std::size_t>(s)] += std::chrono::duration_cast<std::chrono::nanoseconds>(d).count();
    }
    double seconds(Stage s) const { return static_cast<double>(ns_[static_cast<std::size_t>(s)].load()) * 1e-9; }

private:
    std::array<std::atomic<long long>, static_cast<std::size_t>(Stage::count_)> ns_{};
};

struct SweepResult
{
    std::vector<BerRecord> records;
    std::vector<EstimationStats> estimation;
    std::vector<std::pair<std::string, double>> bench;  // stage, seconds
};

/// Runs fn(0..n-1) on `jobs` threads; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn)
{
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lk(err_mu);
                if (!err)
                    err = std::current_exception();
                next = n;
            }
        }
    };
    const int t = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < t; ++k)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (err)
        std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Calibration

/// Mean energy per rail symbol of a long random waveform (fixed seed).
inline double measure_eb(ShapingFilter filter, int n_c, const WaveformParams& wp, const RrcFilter* rrc,
                         std::size_t symbols = 1u << 16)
{
    Rng rng(derive_seed(0x6e65726779ULL, {static_cast<std::uint64_t>(n_c)}));
    SymbolSeq s(symbols);
    for (auto& v : s)
        v = (rng() & 1u) ? -1 : 1;
    const Waveform w = filter == ShapingFilter::chaotic ? synth_waveform_full(s, n_c, wp) : rrc_shape(s, *rrc);
    double e = 0.0;
    for (double x : w.samples)
        e += x * x;
    return e / static_cast<double>(symbols);
}

// ---------------------------------------------------------------------------
// Frame pipeline

namespace detail {

constexpr std::uint64_t kChaoticFamily = 1;
constexpr std::uint64_t kRrcFamily = 2;
constexpr std::uint64_t kChannelStream = 3;

struct FrameOutcome
{
    std::array<long long, 7> errors{};
    long long bits = 0;
    bool sync_failed = false;
    bool estimation_failed = false;
    bool estimated = false;
    double gain_rms = 0.0;
    double noise_ratio = 0.0;
};

/// Everything that is fixed for a sweep.
struct SweepContext
{
    const ExperimentConfig& cfg;
    Bits training;
    MatchedFilterTaps mf;
    RrcFilter rrc;
    double eb_chaotic = 0.0;
    double eb_rrc = 0.0;
    std::vector<double> rrc_lags;  // RRC cascade at symbol lags 0..
    StageClock* clock = nullptr;

    explicit SweepContext(const ExperimentConfig& c)
        : cfg(c),
          training(gen_training(c.layout, c.master_seed)),
          mf(matched_filter_taps(c.n_c, c.wave)),
          rrc(rrc_taps(c.rrc_rolloff, c.rrc_span, c.n_c))
    {
        eb_chaotic = measure_eb(ShapingFilter::chaotic, c.n_c, c.wave, nullptr);
        eb_rrc = measure_eb(ShapingFilter::rrc, c.n_c, c.wave, &rrc);
        for (int k = 0; k * c.n_c < static_cast<int>(rrc.taps.size()); ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j + static_cast<std::size_t>(k * c.n_c) < rrc.taps.size(); ++j)
                acc += rrc.taps[j] * rrc.taps[j + static_cast<std::size_t>(k * c.n_c)];
            rrc_lags.push_back(acc);
        }
    }

    double rrc_kernel(int k) const
    {
        const auto a = static_cast<std::size_t>(std::abs(k));
        return a < rrc_lags.size() ? rrc_lags[a] : 0.0;
    }
};

class Timer
{
public:
    Timer(StageClock* c, Stage s) : c_(c), s_(s), t0_(std::chrono::steady_clock::now()) {}
    ~Timer()
    {
        if (c_)
            c_->add(s_, std::chrono::steady_clock::now() - t0_);
    }
    Timer(const Timer&) = delete;
    Timer& operator=(const Timer&) = delete;

private:
    StageClock* c_;
    Stage s_;
    std::chrono::steady_clock::time_point t0_;
};

struct FrameChannel
{
    MultipathSpec spec;
    long offset = 0;  // silent samples before the frame (quasi-static only)
};

inline Bits random_bits(Rng& rng, int n)
{
    Bits b(static_cast<std::size_t>(n));
    for (auto& x : b)
        x = static_cast<std::uint8_t>(rng() & 1u);
    return b;
}

/// Runs one frame of one shaping family through channel, receiver and every
/// requested decoder of that family.
inline FrameOutcome run_frame(const SweepContext& ctx, ShapingFilter family, const FrameChannel& ch, double sigma,
                              bool quasi, Rng& rng)
{
    const auto& cfg = ctx.cfg;
    const int n_c = cfg.n_c;
    FrameOutcome out;

    SymbolFrame frame;
    {
        Timer t(ctx.clock, Stage::frame);
        frame = build_frame(cfg.layout, ctx.training, random_bits(rng, cfg.layout.n_data), cfg.wave.n_p);
    }
    std::vector<const SymbolSeq*> rails{&frame.i_syms};
    if (!frame.q_syms.empty())
        rails.push_back(&frame.q_syms);
    const int T = cfg.layout.training_symbols();
    const int D = cfg.layout.data_symbols();
    const auto rail_len = static_cast<std::size_t>(frame.rail_length());

    ShapedFrame shaped;
    {
        Timer t(ctx.clock, Stage::shape);
        shaped = shape(frame, RateConfig{1.0e6, n_c}, family, cfg.wave, &ctx.rrc);
    }

    std::vector<std::vector<double>> rx(rails.size());
    {
        Timer t(ctx.clock, Stage::channel);
        for (std::size_t r = 0; r < rails.size(); ++r) {
            const auto& x = r == 0 ? shaped.i : shaped.q;
            auto prop = propagate(x, ch.spec, n_c);
            std::vector<double> buf(static_cast<std::size_t>(ch.offset), 0.0);
            buf.insert(buf.end(), prop.begin(), prop.end());
            buf.resize(buf.size() + static_cast<std::size_t>(n_c), 0.0);
            add_awgn(buf, sigma, rng);
            rx[r] = std::move(buf);
        }
    }

    const double noise_gain = family == ShapingFilter::chaotic ? ctx.mf.noise_gain() : 1.0;
    const double true_noise_var = sigma * sigma * noise_gain;
    auto fail_all = [&](bool sync) {
        (sync ? out.sync_failed : out.estimation_failed) = true;
        for (auto m : cfg.methods)
            if (family == ShapingFilter::chaotic ? is_chaotic(m) : is_rrc(m))
                out.errors[static_cast<std::size_t>(m)] += static_cast<long long>(D) * static_cast<long long>(rails.size());
        out.bits = static_cast<long long>(D) * static_cast<long long>(rails.size());
        return out;
    };

    // Timing: known in static mode, found by correlation in quasi-static mode.
    long start = static_cast<long>(shaped.lead);
    if (quasi) {
        Timer t(ctx.clock, Stage::filter);
        SymbolSeq tr_i(frame.i_syms.begin(), frame.i_syms.begin() + T);
        const auto ref = family == ShapingFilter::chaotic ? synth_waveform_full(tr_i, n_c, cfg.wave).samples
                                                          : rrc_shape(tr_i, ctx.rrc).samples;
        const long excl = static_cast<long>(cfg.ls_max_delay + 2) * n_c;
        const auto sync = frame_sync(rx[0], ref, cfg.sync_search, excl, cfg.sync_ratio);
        if (!sync.ok)
            return fail_all(true);
        start = sync.offset + static_cast<long>(shaped.lead);
    }

    auto symbol_at = [&](std::size_t r, long k) {
        return family == ShapingFilter::chaotic ? matched_filter_at(rx[r], ctx.mf, k)
                                                : rrc_matched_at(rx[r], ctx.rrc, k);
    };
    const LsOptions ls_opt{cfg.ls_max_delay, cfg.ls_detect, cfg.ls_guard};
    auto estimate_at = [&](long s0) {
        std::vector<std::vector<double>> yt(rails.size(), std::vector<double>(static_cast<std::size_t>(T)));
        std::vector<TrainingObservation> obs;
        for (std::size_t r = 0; r < rails.size(); ++r) {
            for (int n = 0; n < T; ++n)
                yt[r][static_cast<std::size_t>(n)] = symbol_at(r, s0 + static_cast<long>(n) * n_c);
            obs.push_back({yt[r], std::span<const int>(*rails[r]).first(static_cast<std::size_t>(T))});
        }
        if (family == ShapingFilter::chaotic)
            return estimate_channel_ls(obs, [&](int k) { return response_r(k, 0.0, 1.0, cfg.wave); }, ls_opt);
        return estimate_channel_ls(obs, [&](int k) { return ctx.rrc_kernel(k); }, ls_opt);
    };

    ChannelEstimate est;
    if (quasi) {
        // Fine timing, RRC only: its correlation peak is broad and delayed
        // paths pull it late, so the symbol phase within +-n_c/2 of the peak
        // is chosen by the smallest LS residual. The chaotic peak is sharp and
        // already on time; there the residual is flat across +-1 sample and
        // searching it only adds timing jitter.
        if (cfg.genie)
            throw std::logic_error("genie mode must never engage the LS estimator");
        Timer t(ctx.clock, Stage::estimate);
        bool found = false;
        long best = start;
        const long reach = family == ShapingFilter::rrc ? n_c / 2 : 0;
        for (long d = -reach; d <= reach; ++d) {
            if (start + d < 0)
                continue;
            try {
                auto e = estimate_at(start + d);
                if (!found || e.fit_residual < est.fit_residual) {
                    est = std::move(e);
                    best = start + d;
                    found = true;
                }
            } catch (const EstimationError&) {
            }
        }
        if (!found)
            return fail_all(false);
        start = best;
        out.estimated = true;
        std::vector<double> truth(static_cast<std::size_t>(cfg.ls_max_delay + 1), 0.0), got = truth;
        for (std::size_t l = 0; l < ch.spec.paths(); ++l) {
            const auto d = static_cast<std::size_t>(std::lround(ch.spec.delays()[l]));
            if (d < truth.size())
                truth[d] = ch.spec.gains()[l];
        }
        for (std::size_t l = 0; l < est.delays.size(); ++l)
            got[static_cast<std::size_t>(std::lround(est.delays[l]))] = est.gains[l];
        double se = 0.0;
        for (std::size_t d = 0; d < truth.size(); ++d)
            se += (got[d] - truth[d]) * (got[d] - truth[d]);
        out.gain_rms = std::sqrt(se / static_cast<double>(truth.size()));
        out.noise_ratio = true_noise_var > 0.0 ? est.noise_var / true_noise_var : 0.0;
    } else {
        est = ChannelEstimate::known(ch.spec, true_noise_var);
    }

    std::vector<std::vector<double>> y(rails.size());
    {
        Timer t(ctx.clock, Stage::filter);
        for (std::size_t r = 0; r < rails.size(); ++r) {
            if (start + static_cast<long>(rail_len - 1) * n_c >= static_cast<long>(rx[r].size()))
                return fail_all(true);
            y[r].resize(rail_len);
            for (std::size_t n = 0; n < rail_len; ++n)
                y[r][n] = symbol_at(r, start + static_cast<long>(n) * n_c);
        }
    }

    Timer t(ctx.clock, Stage::decide);
    auto count = [&](Method m, std::size_t r, std::span<const int> decided) {
        long long e = 0;
        for (int n = 0; n < D; ++n)
            e += decided[static_cast<std::size_t>(n)] != (*rails[r])[static_cast<std::size_t>(T + n)];
        out.errors[static_cast<std::size_t>(m)] += e;
    };
    for (std::size_t r = 0; r < rails.size(); ++r) {
        const auto& yr = y[r];
        if (family == ShapingFilter::chaotic) {
            if (cfg.has(Method::chaotic_opt)) {
                // Genie: true symbols and true channel, never the LS estimate.
                const CompositeResponse c(ch.spec, cfg.wave);
                const auto th = threshold_optimal(*rails[r], c);
                SymbolSeq d(static_cast<std::size_t>(D));
                for (int n = 0; n < D; ++n)
                    d[static_cast<std::size_t>(n)] = decide(yr[static_cast<std::size_t>(T + n)], th[static_cast<std::size_t>(T + n)]);
                count(Method::chaotic_opt, r, d);
            }
            if (cfg.has(Method::chaotic_subopt)) {
                ThresholdState st(est, cfg.wave);
                const auto d = decode_suboptimal(yr, *rails[r], static_cast<std::size_t>(T),
                                                 static_cast<std::size_t>(T + D), st);
                count(Method::chaotic_subopt, r, d);
            }
            if (cfg.has(Method::chaotic_zero)) {
                SymbolSeq d(static_cast<std::size_t>(D));
                for (int n = 0; n < D; ++n)
                    d[static_cast<std::size_t>(n)] = decide(yr[static_cast<std::size_t>(T + n)], 0.0);
                count(Method::chaotic_zero, r, d);
            }
        } else {
            if (cfg.has(Method::rrc_mmse)) {
                const auto z = mmse_equalize(yr, est, cfg.eq_length, cfg.eq_delay);
                SymbolSeq d(static_cast<std::size_t>(D));
                for (int n = 0; n < D; ++n)
                    d[static_cast<std::size_t>(n)] = decide(z[static_cast<std::size_t>(T + n)], 0.0);
                count(Method::rrc_mmse, r, d);
            }
            if (cfg.has(Method::rrc_noeq)) {
                SymbolSeq d(static_cast<std::size_t>(D));
                for (int n = 0; n < D; ++n)
                    d[static_cast<std::size_t>(n)] = decide(yr[static_cast<std::size_t>(T + n)], 0.0);
                count(Method::rrc_noeq, r, d);
            }
        }
    }
    out.bits = static_cast<long long>(D) * static_cast<long long>(rails.size());
    return out;
}

inline std::vector<std::pair<std::string, double>> bench_report(const StageClock& clock)
{
    std::vector<std::pair<std::string, double>> b;
    for (int s = 0; s < static_cast<int>(Stage::count_); ++s)
        b.emplace_back(stage_name(static_cast<Stage>(s)), clock.seconds(static_cast<Stage>(s)));
    return b;
}

inline bool wants(const ExperimentConfig& cfg, ShapingFilter f)
{
    for (auto m : cfg.methods)
        if (f == ShapingFilter::chaotic ? is_chaotic(m) : is_rrc(m))
            return true;
    return false;
}

/// Shared driver of the static and quasi-static sweeps.
inline SweepResult run_sweep(const ExperimentConfig& cfg, bool quasi, bool bench)
{
    cfg.validate();
    for (const auto& name : cfg.channels)
        if (channel_preset(name).quasi_static != quasi)
            throw std::invalid_argument("channel preset '" + name + "' is not a " +
                                        (quasi ? "quasi-static" : "static") + " preset");
    if (quasi && cfg.has(Method::chaotic_opt))
        throw std::invalid_argument("chaotic-opt (genie) is defined for static known channels only");
    StageClock clock;
    SweepContext ctx(cfg);
    if (bench)
        ctx.clock = &clock;

    const long long per_frame = cfg.layout.n_data;
    const int frames = quasi ? cfg.frames : static_cast<int>((cfg.bits + per_frame - 1) / per_frame);
    std::vector<ShapingFilter> families;
    for (auto f : {ShapingFilter::chaotic, ShapingFilter::rrc})
        if (wants(cfg, f))
            families.push_back(f);

    SweepResult res;
    for (std::size_t ci = 0; ci < cfg.channels.size(); ++ci) {
        const auto preset = channel_preset(cfg.channels[ci]);
        const std::size_t points = cfg.ebn0_grid.size();
        const std::size_t tasks = points * static_cast<std::size_t>(frames) * families.size();
        std::vector<FrameOutcome> outcomes(tasks);

        parallel_for(tasks, cfg.jobs, [&](std::size_t task) {
            const std::size_t fam = task % families.size();
            const std::size_t rest = task / families.size();
            const std::size_t frame = rest % static_cast<std::size_t>(frames);
            const std::size_t point = rest / static_cast<std::size_t>(frames);
            const auto family = families[fam];
            const std::uint64_t fam_key = family == ShapingFilter::chaotic ? kChaoticFamily : kRrcFamily;

            // The channel realization is shared by both families of a frame.
            FrameChannel fc;
            if (quasi) {
                Rng crng(derive_seed(cfg.master_seed, {ci, point, frame, kChannelStream}));
                QuasiStaticModel model{cfg.gamma_min, cfg.gamma_max, preset.delays};
                fc.spec = MultipathSpec::exponential(draw_gamma(model, crng), preset.delays);
                fc.offset = std::uniform_int_distribution<long>(0, cfg.max_offset)(crng);
            } else {
                fc.spec = preset.static_spec();
            }
            const double eb = family == ShapingFilter::chaotic ? ctx.eb_chaotic : ctx.eb_rrc;
            const double sigma = calibrate_noise(cfg.ebn0_grid[point], eb, cfg.n_c);
            Rng rng(derive_seed(cfg.master_seed, {ci, point, frame, fam_key}));
            outcomes[task] = run_frame(ctx, family, fc, sigma, quasi, rng);
        });

        for (std::size_t point = 0; point < points; ++point) {
            for (std::size_t fam = 0; fam < families.size(); ++fam) {
                const auto family = families[fam];
                std::array<long long, 7> errors{};
                long long bits = 0;
                EstimationStats st;
                st.family = family == ShapingFilter::chaotic ? "chaotic" : "rrc";
                st.channel = preset.name;
                st.ebn0_db = cfg.ebn0_grid[point];
                int estimated = 0;
                for (int frame = 0; frame < frames; ++frame) {
                    const auto& o = outcomes[(point * static_cast<std::size_t>(frames) + static_cast<std::size_t>(frame)) *
                                                 families.size() + fam];
                    ++st.frames;
                    st.sync_failures += o.sync_failed;
                    st.estimation_failures += o.estimation_failed;
                    const bool failed = o.sync_failed || o.estimation_failed;
                    if (failed && cfg.failure_mode == FailureMode::excluded)
                        continue;
                    bits += o.bits;
                    for (std::size_t m = 0; m < errors.size(); ++m)
                        errors[m] += o.errors[m];
                    if (o.estimated) {
                        ++estimated;
                        st.gain_rms_mean += o.gain_rms;
                        st.gain_rms_max = std::max(st.gain_rms_max, o.gain_rms);
                        st.noise_ratio_mean += o.noise_ratio;
                    }
                }
                if (estimated > 0) {
                    st.gain_rms_mean /= estimated;
                    st.noise_ratio_mean /= estimated;
                }
                for (auto m : cfg.methods)
                    if (family == ShapingFilter::chaotic ? is_chaotic(m) : is_rrc(m))
                        res.records.push_back(make_record(method_name(m), preset.name, cfg.ebn0_grid[point], bits,
                                                          errors[static_cast<std::size_t>(m)]));
                if (quasi)
                    res.estimation.push_back(st);
            }
        }
    }
    if (bench)
        res.bench = bench_report(clock);
    return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public runners

inline SweepResult run_static_sweep(const ExperimentConfig& cfg, bool bench = false)
{
    return detail::run_sweep(cfg, false, bench);
}

inline SweepResult run_quasi_static(const ExperimentConfig& cfg, bool bench = false)
{
    return detail::run_sweep(cfg, true, bench);
}

/// Analytic curves on the simulation's noise footing: sigma from the measured
/// chaotic Eb, sigma_W from the matched filter's noise gain.
inline std::vector<BerRecord> run_theory_curves(const ExperimentConfig& cfg)
{
    if (cfg.ebn0_grid.empty() || cfg.channels.empty())
        throw std::invalid_argument("run_theory_curves: empty grid or channel list");
    cfg.wave.validate();
    const auto mf = matched_filter_taps(cfg.n_c, cfg.wave);
    const double eb = measure_eb(ShapingFilter::chaotic, cfg.n_c, cfg.wave, nullptr);
    std::vector<BerRecord> out;
    for (const auto& name : cfg.channels) {
        const auto preset = channel_preset(name);
        if (preset.quasi_static)
            throw std::invalid_argument("run_theory_curves: needs a static channel preset, got '" + name + "'");
        const auto spec = preset.static_spec();
        const double P = total_power(spec, cfg.wave);
        for (double e : cfg.ebn0_grid) {
            const double sigma_w = calibrate_noise(e, eb, cfg.n_c) * std::sqrt(mf.noise_gain());
            for (auto m : {Method::theory_opt, Method::theory_subopt}) {
                BerRecord r{method_name(m), name, e, 0, 0, 0.0, 0.0};
                r.ber = m == Method::theory_opt ? ber_optimal(P, sigma_w) : ber_suboptimal(spec, sigma_w, cfg.wave);
                out.push_back(r);
            }
        }
    }
    return out;
}

}  // namespace chaosbb
