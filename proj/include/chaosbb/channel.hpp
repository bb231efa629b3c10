#pragma once

// Multipath + AWGN channel: h(t) = sum_l alpha_l delta(t - tau_l) with
// exponentially decaying gains, static or redrawn per frame.

#include <chaosbb/random.hpp>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chaosbb {

inline std::vector<double> gains_from_gamma(double gamma, std::span<const double> delays)
{
    if (!(gamma > 0.0))
        throw std::invalid_argument("gains_from_gamma: gamma must be positive");
    std::vector<double> g(delays.size());
    for (std::size_t l = 0; l < delays.size(); ++l)
        g[l] = std::exp(-gamma * delays[l]);
    return g;
}

/// Path delays in symbol periods and linear gains.
class MultipathSpec
{
public:
    MultipathSpec() : MultipathSpec(std::vector<double>{0.0}, std::vector<double>{1.0}) {}

    MultipathSpec(std::vector<double> delays, std::vector<double> gains)
        : delays_(std::move(delays)), gains_(std::move(gains))
    {
        check();
    }

    static MultipathSpec exponential(double gamma, std::vector<double> delays)
    {
        auto g = gains_from_gamma(gamma, delays);
        MultipathSpec s(std::move(delays), std::move(g));
        s.gamma_ = gamma;
        return s;
    }

    const std::vector<double>& delays() const { return delays_; }
    const std::vector<double>& gains() const { return gains_; }
    std::optional<double> gamma() const { return gamma_; }
    std::size_t paths() const { return delays_.size(); }
    double max_delay() const { return delays_.back(); }

private:
    void check() const
    {
        if (delays_.empty() || delays_.size() != gains_.size())
            throw std::invalid_argument("MultipathSpec: need one gain per delay and at least one path");
        if (delays_.front() != 0.0)
            throw std::invalid_argument("MultipathSpec: first delay must be 0");
        for (std::size_t l = 1; l < delays_.size(); ++l)
            if (!(delays_[l] > delays_[l - 1]))
                throw std::invalid_argument("MultipathSpec: delays must be strictly increasing");
        for (double g : gains_)
            if (!std::isfinite(g))
                throw std::invalid_argument("MultipathSpec: gains must be finite");
    }

    std::vector<double> delays_;
    std::vector<double> gains_;
    std::optional<double> gamma_;
};

struct NoiseSpec
{
    enum class Mode { eb_n0_db, sigma };
    Mode mode = Mode::sigma;
    double value = 0.0;
};

struct QuasiStaticModel
{
    double gamma_min = 0.3;
    double gamma_max = 0.9;
    std::vector<double> delays{0.0, 1.0};

    void validate() const
    {
        if (!(gamma_min > 0.0) || !(gamma_min < gamma_max))
            throw std::invalid_argument("QuasiStaticModel: need 0 < gamma_min < gamma_max");
    }
};

inline long delay_in_samples(double tau, int n_c)
{
    const double d = tau * n_c;
    const double r = std::round(d);
    if (std::abs(d - r) > 1e-9)
        throw std::invalid_argument("propagate: delay " + std::to_string(tau) +
                                    " is not a multiple of 1/n_c = 1/" + std::to_string(n_c));
    return static_cast<long>(r);
}

/// out(k) = sum_l alpha_l in(k - tau_l n_c); length grows by the largest delay.
inline std::vector<double> propagate(std::span<const double> in, const MultipathSpec& spec, int n_c)
{
    std::vector<long> shift(spec.paths());
    for (std::size_t l = 0; l < spec.paths(); ++l)
        shift[l] = delay_in_samples(spec.delays()[l], n_c);
    std::vector<double> out(in.size() + static_cast<std::size_t>(shift.back()), 0.0);
    for (std::size_t l = 0; l < spec.paths(); ++l) {
        const double a = spec.gains()[l];
        double* dst = out.data() + shift[l];
        for (std::size_t k = 0; k < in.size(); ++k)
            dst[k] += a * in[k];
    }
    return out;
}

inline void add_awgn(std::span<double> samples, double sigma, Rng& rng)
{
    if (sigma == 0.0)
        return;
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& x : samples)
        x += gauss(rng);
}

inline std::vector<double> add_awgn(std::span<const double> samples, double sigma, std::uint64_t seed)
{
    std::vector<double> out(samples.begin(), samples.end());
    Rng rng(seed);
    add_awgn(out, sigma, rng);
    return out;
}

/// Per-dimension noise std for a target Eb/N0, with Eb the measured energy
/// per bit of the transmitted samples.
inline double calibrate_noise(double ebn0_db, double energy_per_bit, int /*n_c*/)
{
    if (!(energy_per_bit > 0.0))
        throw std::invalid_argument("calibrate_noise: energy per bit must be positive");
    return std::sqrt(energy_per_bit / (2.0 * std::pow(10.0, ebn0_db / 10.0)));
}

inline double noise_sigma(const NoiseSpec& ns, double energy_per_bit, int n_c)
{
    if (ns.mode == NoiseSpec::Mode::sigma) {
        if (!(ns.value >= 0.0))
            throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
        return ns.value;
    }
    if (!std::isfinite(ns.value))
        throw std::invalid_argument("NoiseSpec: Eb/N0 must be finite");
    return calibrate_noise(ns.value, energy_per_bit, n_c);
}

inline double draw_gamma(const QuasiStaticModel& model, Rng& rng)
{
    std::uniform_real_distribution<double> u(model.gamma_min, model.gamma_max);
    return u(rng);
}

inline double draw_gamma(const QuasiStaticModel& model, std::uint64_t seed)
{
    model.validate();
    Rng rng(seed);
    return draw_gamma(model, rng);
}

/// Receiver-side channel knowledge: path delays (symbol periods, on the
/// estimation grid), gains and the post-matched-filter noise variance.
struct ChannelEstimate
{
    std::vector<double> delays;
    std::vector<double> gains;
    double noise_var = 0.0;
    /// Residual power per row of the unpruned fit (LS estimates only).
    double fit_residual = 0.0;

    static ChannelEstimate known(const MultipathSpec& spec, double noise_var)
    {
        return {spec.delays(), spec.gains(), noise_var, 0.0};
    }

    double max_delay() const { return delays.empty() ? 0.0 : delays.back(); }
};

/// Named channel configurations.
struct ChannelPreset
{
    std::string name;
    std::vector<double> delays;
    double gamma = 0.6;
    bool quasi_static = false;
    QuasiStaticModel quasi;

    MultipathSpec static_spec() const
    {
        if (delays.size() == 1)
            return MultipathSpec{};
        return MultipathSpec::exponential(gamma, delays);
    }
};

inline ChannelPreset channel_preset(const std::string& name)
{
    ChannelPreset p;
    p.name = name;
    if (name == "single") {
        p.delays = {0.0};
    } else if (name == "static2") {
        p.delays = {0.0, 1.0};
    } else if (name == "static3") {
        p.delays = {0.0, 1.0, 2.0};
    } else if (name == "quasi" || name == "quasi2") {
        p.delays = {0.0, 1.0};
        p.quasi_static = true;
    } else if (name == "quasi3") {
        p.delays = {0.0, 1.0, 2.0};
        p.quasi_static = true;
    } else {
        throw std::invalid_argument("unknown channel preset '" + name + "'");
    }
    p.quasi.delays = p.delays;
    return p;
}

}  // namespace chaosbb
