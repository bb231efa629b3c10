#include <catch2/catch_amalgamated.hpp>

#include <chaosbb/channel.hpp>
#include <chaosbb/rx.hpp>

#include <cmath>
#include <numeric>

using namespace chaosbb;
using Catch::Approx;

TEST_CASE("gains follow the exponential law")
{
    const std::vector<double> d{0.0, 1.0, 2.0};
    const auto g = gains_from_gamma(0.6, d);
    CHECK(g[0] == 1.0);
    CHECK(g[1] == Approx(0.5488).margin(1e-4));
    CHECK(g[2] == Approx(0.3012).margin(1e-4));
    const auto big = gains_from_gamma(80.0, d);
    CHECK(big[0] == 1.0);
    CHECK(big[1] < 1e-30);
    CHECK_THROWS_AS(gains_from_gamma(0.0, d), std::invalid_argument);

    const auto s = MultipathSpec::exponential(0.6, d);
    for (std::size_t l = 0; l < 3; ++l)
        CHECK(s.gains()[l] == std::exp(-0.6 * d[l]));
    REQUIRE(s.gamma().has_value());
    CHECK(*s.gamma() == 0.6);
}

TEST_CASE("multipath spec invariants")
{
    CHECK_THROWS_AS(MultipathSpec({0.5}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(MultipathSpec({0.0, 1.0, 1.0}, {1.0, 0.5, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(MultipathSpec({0.0, 1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(MultipathSpec({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(MultipathSpec({0.0}, {NAN}), std::invalid_argument);
}

TEST_CASE("propagate")
{
    const int n_c = 8;
    std::vector<double> imp(20, 0.0);
    imp[0] = 1.0;
    const auto two = MultipathSpec::exponential(0.6, {0.0, 1.0});
    const auto out = propagate(imp, two, n_c);
    REQUIRE(out.size() == 28u);
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k == 0)
            CHECK(out[k] == 1.0);
        else if (k == 8)
            CHECK(out[k] == Approx(0.5488).margin(1e-4));
        else
            CHECK(out[k] == 0.0);
    }

    std::vector<double> x(50);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = std::sin(0.37 * static_cast<double>(k)) + 0.1 * static_cast<double>(k % 3);
    CHECK(propagate(x, MultipathSpec{}, n_c) == x);

    std::vector<double> a(40), b(40), ab(40);
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = std::cos(0.2 * static_cast<double>(k));
        b[k] = static_cast<double>(k % 5) - 2.0;
        ab[k] = a[k] + b[k];
    }
    const auto three = MultipathSpec::exponential(0.6, {0.0, 1.0, 2.0});
    const auto pa = propagate(a, three, n_c), pb = propagate(b, three, n_c), pab = propagate(ab, three, n_c);
    for (std::size_t k = 0; k < pab.size(); ++k)
        CHECK(pab[k] == Approx(pa[k] + pb[k]).margin(1e-12));

    // Time invariance: a delayed input gives a delayed output.
    std::vector<double> sh(5, 0.0);
    sh.insert(sh.end(), a.begin(), a.end());
    const auto psh = propagate(sh, three, n_c);
    for (std::size_t k = 0; k < pa.size(); ++k)
        CHECK(psh[k + 5] == pa[k]);

    CHECK_THROWS_WITH(propagate(a, MultipathSpec({0.0, 0.3}, {1.0, 0.5}), n_c),
                      Catch::Matchers::ContainsSubstring("not a multiple"));
    CHECK_NOTHROW(propagate(a, MultipathSpec({0.0, 0.375}, {1.0, 0.5}), n_c));
}

TEST_CASE("AWGN statistics")
{
    std::vector<double> zeros(1000000, 0.0);
    CHECK(add_awgn(zeros, 0.0, 9) == zeros);
    const auto n = add_awgn(zeros, 1.0, 9);
    const double mean = std::accumulate(n.begin(), n.end(), 0.0) / static_cast<double>(n.size());
    double var = 0.0, lag1 = 0.0;
    for (std::size_t k = 0; k < n.size(); ++k) {
        var += (n[k] - mean) * (n[k] - mean);
        if (k > 0)
            lag1 += (n[k] - mean) * (n[k - 1] - mean);
    }
    var /= static_cast<double>(n.size());
    CHECK(var >= 0.995);
    CHECK(var <= 1.005);
    CHECK(std::abs(lag1 / (var * static_cast<double>(n.size()))) < 0.01);
    CHECK(add_awgn(zeros, 1.0, 9) == n);
    CHECK(add_awgn(zeros, 1.0, 10) != n);
}

TEST_CASE("noise calibration")
{
    CHECK(calibrate_noise(0.0, 1.0, 8) * calibrate_noise(0.0, 1.0, 8) == Approx(0.5));
    const double s0 = calibrate_noise(4.0, 2.7, 8), s1 = calibrate_noise(4.0 + 3.0103, 2.7, 8);
    CHECK(s1 * s1 == Approx(s0 * s0 / 2.0).epsilon(1e-5));
    CHECK_THROWS_AS(calibrate_noise(0.0, 0.0, 8), std::invalid_argument);
    CHECK(noise_sigma(NoiseSpec{NoiseSpec::Mode::sigma, 0.3}, 1.0, 8) == 0.3);
    CHECK(noise_sigma(NoiseSpec{NoiseSpec::Mode::eb_n0_db, 0.0}, 1.0, 8) == Approx(std::sqrt(0.5)));
    CHECK_THROWS_AS(noise_sigma(NoiseSpec{NoiseSpec::Mode::sigma, -1.0}, 1.0, 8), std::invalid_argument);
}

TEST_CASE("post-matched-filter noise variance is sigma^2 times the tap energy")
{
    const WaveformParams wp;
    const auto mf = matched_filter_taps(8, wp);
    const double sigma = 0.7;
    // Neighbouring outputs are correlated over the filter length, so a long
    // record is needed for a 1% check (about 0.3% standard error here).
    const auto noise = add_awgn(std::vector<double>(8000000, 0.0), sigma, 77);
    double var = 0.0;
    long count = 0;
    for (long k = 100; k < 8000000 - 100; k += 2) {
        const double y = matched_filter_at(noise, mf, k);
        var += y * y;
        ++count;
    }
    CHECK(var / static_cast<double>(count) == Approx(sigma * sigma * mf.noise_gain()).epsilon(0.01));
}

TEST_CASE("gamma draws")
{
    const QuasiStaticModel m;
    Rng rng(123);
    double sum = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const double g = draw_gamma(m, rng);
        REQUIRE(g >= 0.3);
        REQUIRE(g <= 0.9);
        sum += g;
    }
    CHECK(sum / 100000.0 == Approx(0.6).margin(0.005));
    CHECK(draw_gamma(m, 5) == draw_gamma(m, 5));
    CHECK_THROWS_AS((QuasiStaticModel{0.9, 0.3, {0.0}}.validate()), std::invalid_argument);
    CHECK_THROWS_AS(draw_gamma(QuasiStaticModel{0.0, 0.3, {0.0}}, 1), std::invalid_argument);
}

TEST_CASE("channel presets")
{
    CHECK(channel_preset("static2").static_spec().gains()[1] == Approx(std::exp(-0.6)));
    CHECK(channel_preset("static3").static_spec().paths() == 3u);
    CHECK(channel_preset("single").static_spec().paths() == 1u);
    CHECK(channel_preset("quasi").quasi_static);
    CHECK(channel_preset("quasi3").delays.size() == 3u);
    CHECK_THROWS_AS(channel_preset("fading"), std::invalid_argument);
}

TEST_CASE("derived seeds are distinct and stable")
{
    CHECK(derive_seed(1, {0, 0, 0}) == derive_seed(1, {0, 0, 0}));
    CHECK(derive_seed(1, {0, 0, 1}) != derive_seed(1, {0, 1, 0}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}
