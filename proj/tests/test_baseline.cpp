#include <catch2/catch_amalgamated.hpp>

#include <chaosbb/experiment.hpp>
#include <chaosbb/rrc.hpp>

#include <cmath>
#include <numeric>

using namespace chaosbb;
using Catch::Approx;

namespace {

// Worst |cascade| at nonzero symbol lags relative to the peak.
double nyquist_leak(const RrcFilter& f)
{
    const auto c = convolve(f.taps, f.taps);
    const long mid = static_cast<long>(c.size() / 2);
    double worst = 0.0;
    for (long k = 1; mid + k * f.n_c < static_cast<long>(c.size()); ++k)
        worst = std::max({worst, std::abs(c[static_cast<std::size_t>(mid + k * f.n_c)]),
                          std::abs(c[static_cast<std::size_t>(mid - k * f.n_c)])});
    return worst / c[static_cast<std::size_t>(mid)];
}

std::vector<double> combined(const std::vector<double>& g, const MmseEqualizer& eq)
{
    return convolve(g, eq.taps);
}

}  // namespace

TEST_CASE("RRC taps")
{
    const auto f = rrc_taps(0.25, 16, 8);
    REQUIRE(f.taps.size() == 16u * 8u + 1u);
    const long c = f.center();
    for (long k = 0; k <= c; ++k)
        CHECK(f.taps[static_cast<std::size_t>(c - k)] == f.taps[static_cast<std::size_t>(c + k)]);
    CHECK(std::max_element(f.taps.begin(), f.taps.end()) - f.taps.begin() == c);
    const double e = std::inner_product(f.taps.begin(), f.taps.end(), f.taps.begin(), 0.0);
    CHECK(e == Approx(1.0).margin(1e-6));
    CHECK(nyquist_leak(f) < 1e-3);

    // t = +-1/(4a) lands on the grid for a = 0.25; the limit value must be
    // continuous with its neighbours.
    const double at = rrc_value(1.0, 0.25);
    CHECK(std::isfinite(at));
    CHECK(at == Approx(0.5 * (rrc_value(1.0 - 1e-6, 0.25) + rrc_value(1.0 + 1e-6, 0.25))).margin(1e-6));
    CHECK(rrc_value(0.0, 0.25) == Approx(1.0 - 0.25 + 1.0 / std::numbers::pi));
}

TEST_CASE("RRC span and Nyquist leakage")
{
    // An 8-symbol span truncates the tails too hard for the 1e-3 criterion.
    CHECK(nyquist_leak(rrc_taps(0.25, 8, 8)) > 1e-3);
    CHECK(nyquist_leak(rrc_taps(0.25, 16, 8)) < 1e-3);
    CHECK(nyquist_leak(rrc_taps(0.5, 16, 4)) < 1e-3);
}

TEST_CASE("RRC parameter checks")
{
    CHECK_THROWS_AS(rrc_taps(0.0, 16, 8), std::invalid_argument);
    CHECK_THROWS_AS(rrc_taps(1.5, 16, 8), std::invalid_argument);
    CHECK_THROWS_AS(rrc_taps(0.25, 4, 8), std::invalid_argument);
    CHECK_THROWS_AS(rrc_taps(0.25, 15, 8), std::invalid_argument);
    CHECK_THROWS_AS(rrc_taps(0.25, 16, 1), std::invalid_argument);
    CHECK_NOTHROW(rrc_taps(1.0, 6, 2));
}

TEST_CASE("RRC shaping and matched filtering is ISI free")
{
    const auto f = rrc_taps(0.25, 16, 8);
    Rng rng(4);
    SymbolSeq s(300);
    for (auto& v : s)
        v = (rng() & 1u) ? -1 : 1;
    const auto w = rrc_shape(s, f);
    for (std::size_t m = 0; m < s.size(); ++m) {
        const double y = rrc_matched_at(w.samples, f, static_cast<long>(w.lead + m * 8));
        REQUIRE(y == Approx(s[m]).margin(0.02));
    }
}

TEST_CASE("MMSE: single path is the identity")
{
    const std::vector<double> g{1.0};
    const auto eq = design_mmse(g, 1e-12, 15, 7);
    for (int j = 0; j < 15; ++j)
        CHECK(eq.taps[static_cast<std::size_t>(j)] == Approx(j == 7 ? 1.0 : 0.0).margin(1e-9));
    CHECK(eq.residual < 1e-9);

    std::vector<double> y{0.3, -1.2, 2.0, 0.7};
    const auto z = apply_equalizer(y, eq);
    for (std::size_t n = 0; n < y.size(); ++n)
        CHECK(z[n] == Approx(y[n]).margin(1e-9));
}

TEST_CASE("MMSE: noiseless two-path residual ISI below 1%")
{
    const std::vector<double> g{1.0, std::exp(-0.6)};
    const auto eq = design_mmse(g, 0.0, 15, 7);
    const auto h = combined(g, eq);
    double isi = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k)
        if (k != 7)
            isi += h[k] * h[k];
    CHECK(isi < 0.01 * h[7] * h[7]);
    CHECK(h[7] == Approx(1.0).margin(0.01));
}

TEST_CASE("MMSE taps minimize the empirical MSE")
{
    const std::vector<double> g{1.0, 0.55, 0.3};
    const double nv = 0.05;
    const auto eq = design_mmse(g, nv, 15, 7);
    // Held-out block: fresh symbols and noise of the design variance.
    Rng rng(21);
    std::normal_distribution<double> gauss(0.0, std::sqrt(nv));
    const std::size_t N = 400000;
    std::vector<double> s(N), y(N, 0.0);
    for (auto& v : s)
        v = (rng() & 1u) ? -1.0 : 1.0;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < g.size() && k <= n; ++k)
            y[n] += g[k] * s[n - k];
        y[n] += gauss(rng);
    }
    auto mse = [&](const MmseEqualizer& e) {
        const auto z = apply_equalizer(y, e);
        double acc = 0.0;
        for (std::size_t n = 100; n + 100 < N; ++n)
            acc += (z[n] - s[n]) * (z[n] - s[n]);
        return acc;
    };
    const double base = mse(eq);
    for (int j = 0; j < 15; ++j)
        for (double d : {1e-3, -1e-3}) {
            auto p = eq;
            p.taps[static_cast<std::size_t>(j)] += d;
            CHECK(mse(p) >= base);
        }
}

TEST_CASE("MMSE: heavy noise shrinks the taps")
{
    const std::vector<double> g{1.0, std::exp(-0.6)};
    double prev = 1e300;
    for (double nv : {1.0, 1e2, 1e4, 1e6}) {
        const auto eq = design_mmse(g, nv, 15, 7);
        double norm = 0.0;
        for (double w : eq.taps)
            norm += w * w;
        CHECK(norm < prev);
        prev = norm;
    }
    CHECK(prev < 1e-10);
}

TEST_CASE("MMSE errors and channel conversion")
{
    CHECK_THROWS_AS(design_mmse(std::vector<double>{0.0, 0.0}, 0.0, 15, 7), MmseError);
    CHECK_THROWS_AS(design_mmse(std::vector<double>{}, 0.1, 15, 7), std::invalid_argument);
    CHECK_THROWS_AS(design_mmse(std::vector<double>{1.0}, -0.1, 15, 7), std::invalid_argument);
    CHECK_THROWS_AS(design_mmse(std::vector<double>{1.0}, 0.1, 15, 20), std::invalid_argument);

    ChannelEstimate est;
    est.delays = {0.0, 2.0};
    est.gains = {0.9, 0.4};
    CHECK(symbol_channel(est) == std::vector<double>{0.9, 0.0, 0.4});
    est.delays = {0.0, 1.5};
    CHECK_THROWS_AS(symbol_channel(est), std::invalid_argument);
}

TEST_CASE("noiseless RRC link with MMSE decodes exactly")
{
    const auto f = rrc_taps(0.25, 16, 8);
    const auto ch = MultipathSpec::exponential(0.6, {0.0, 1.0, 2.0});
    Rng rng(8);
    SymbolSeq s(20000);
    for (auto& v : s)
        v = (rng() & 1u) ? -1 : 1;
    const auto w = rrc_shape(s, f);
    const auto x = propagate(w.samples, ch, 8);
    std::vector<double> y(s.size());
    for (std::size_t n = 0; n < s.size(); ++n)
        y[n] = rrc_matched_at(x, f, static_cast<long>(w.lead + n * 8));
    const auto z = mmse_equalize(y, ChannelEstimate::known(ch, 1e-6), 15, 7);
    long errors = 0;
    for (std::size_t n = 0; n < s.size(); ++n)
        errors += decide(z[n], 0.0) != s[n];
    CHECK(errors == 0);
}

TEST_CASE("static two-path: equalized RRC is worse than chaotic suboptimal at 8 dB")
{
    ExperimentConfig cfg;
    cfg.channels = {"static2"};
    cfg.methods = {Method::chaotic_subopt, Method::rrc_mmse};
    cfg.ebn0_grid = {8.0};
    cfg.bits = 400000;
    cfg.jobs = 4;
    const auto r = run_static_sweep(cfg).records;
    REQUIRE(r.size() == 2u);
    const auto& sub = r[0].method == "chaotic-subopt" ? r[0] : r[1];
    const auto& mmse = r[0].method == "rrc-mmse" ? r[0] : r[1];
    CHECK(mmse.ber > sub.ber);
}
