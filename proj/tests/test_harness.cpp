#include <catch2/catch_amalgamated.hpp>

#include <chaosbb/chaosbb.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace chaosbb;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_static()
{
    ExperimentConfig c;
    c.channels = {"static2", "static3"};
    c.methods = {Method::chaotic_opt, Method::chaotic_subopt, Method::chaotic_zero, Method::rrc_mmse,
                 Method::rrc_noeq};
    c.genie = true;
    c.ebn0_grid = {2.0, 6.0};
    c.bits = 20000;
    return c;
}

ExperimentConfig small_quasi()
{
    ExperimentConfig c;
    c.channels = {"quasi2", "quasi3"};
    c.methods = {Method::chaotic_subopt, Method::chaotic_zero, Method::rrc_mmse};
    c.ebn0_grid = {3.0, 8.0};
    c.frames = 12;
    return c;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config file parsing")
{
    const auto m = parse_config_text(R"(
# comment
methods = chaotic-subopt, rrc-mmse   # trailing comment
channels = static3
ebn0_db = 0:2:10
bits = 1234
seed = 77
jobs = 3
rrc_span = 12
failure_mode = excluded
)");
    ExperimentConfig c;
    apply_config(m, c);
    CHECK(c.methods == std::vector<Method>{Method::chaotic_subopt, Method::rrc_mmse});
    CHECK(c.channels == std::vector<std::string>{"static3"});
    CHECK(c.ebn0_grid == std::vector<double>{0, 2, 4, 6, 8, 10});
    CHECK(c.bits == 1234);
    CHECK(c.master_seed == 77u);
    CHECK(c.jobs == 3);
    CHECK(c.rrc_span == 12);
    CHECK(c.failure_mode == FailureMode::excluded);
    CHECK_NOTHROW(c.validate());

    CHECK(parse_grid("1.5, 3, 7") == std::vector<double>{1.5, 3, 7});
    CHECK(parse_grid("0:0.5:1") == std::vector<double>{0, 0.5, 1});
    CHECK_THROWS_AS(parse_grid("0:-1:3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("no equals sign"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config({{"bogus", "1"}}, c), std::invalid_argument);
    CHECK_THROWS_AS(apply_config({{"bits", "12x"}}, c), std::invalid_argument);
    CHECK_THROWS_AS(apply_config({{"methods", "chaotic-best"}}, c), std::invalid_argument);
    CHECK_THROWS_AS(apply_config({{"genie", "maybe"}}, c), std::invalid_argument);

    ExperimentConfig r;
    apply_config({{"layout", "replay"}}, r);
    CHECK(r.layout.n_training == 1023);
    CHECK(r.layout.modulation == Modulation::bpsk);
}

TEST_CASE("config validation")
{
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.genie = true;  // genie without chaotic-opt
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.genie = false;
    c.methods.push_back(Method::chaotic_opt);  // chaotic-opt needs genie
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.genie = true;
    CHECK_NOTHROW(c.validate());

    ExperimentConfig d;
    d.bits = 0;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = {};
    d.ebn0_grid.clear();
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = {};
    d.channels = {"nowhere"};
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = {};
    d.jobs = 0;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("sweeps reject mismatched presets and genie in quasi-static mode")
{
    auto s = small_static();
    s.channels = {"quasi2"};
    CHECK_THROWS_AS(run_static_sweep(s), std::invalid_argument);
    auto q = small_quasi();
    q.channels = {"static2"};
    CHECK_THROWS_AS(run_quasi_static(q), std::invalid_argument);
    // The genie path must never meet the LS estimator.
    auto g = small_quasi();
    g.methods.push_back(Method::chaotic_opt);
    g.genie = true;
    CHECK_THROWS_AS(run_quasi_static(g), std::invalid_argument);
}

TEST_CASE("static sweep: accounting and determinism")
{
    auto c = small_static();
    const auto a = run_static_sweep(c);
    // ceil(20000 / 3840) frames per point, every data bit counted once per method.
    const long long expect_bits = 6LL * 3840;
    REQUIRE(a.records.size() == 2u * 2u * 5u);
    for (const auto& r : a.records) {
        CHECK(r.bits == expect_bits);
        CHECK(r.errors <= r.bits);
        CHECK(r.ber == static_cast<double>(r.errors) / static_cast<double>(r.bits));
        CHECK(r.ci95 == Approx(1.96 * std::sqrt(r.ber * (1 - r.ber) / static_cast<double>(r.bits))));
    }
    c.jobs = 4;
    CHECK(to_csv(run_static_sweep(c).records) == to_csv(a.records));
    c.master_seed = 2;
    CHECK(to_csv(run_static_sweep(c).records) != to_csv(a.records));
}

TEST_CASE("quasi-static sweep: determinism and estimation report")
{
    auto c = small_quasi();
    const auto a = run_quasi_static(c);
    REQUIRE(a.records.size() == 2u * 2u * 3u);
    REQUIRE(a.estimation.size() == 2u * 2u * 2u);
    for (const auto& s : a.estimation) {
        CHECK(s.frames == 12);
        CHECK(s.sync_failures + s.estimation_failures == 0);
        CHECK(s.gain_rms_mean > 0.0);
        CHECK(s.gain_rms_mean < 0.2);
        CHECK(s.noise_ratio_mean == Approx(1.0).margin(0.3));
    }
    for (int jobs : {2, 5}) {
        c.jobs = jobs;
        const auto b = run_quasi_static(c);
        CHECK(to_csv(b.records) == to_csv(a.records));
        CHECK(estimation_csv(b.estimation) == estimation_csv(a.estimation));
    }
}

TEST_CASE("quasi-static failure accounting")
{
    auto c = small_quasi();
    c.channels = {"quasi2"};
    c.ebn0_grid = {6.0};
    c.frames = 4;
    c.sync_ratio = 1e9;  // nothing can sync
    const auto pess = run_quasi_static(c);
    for (const auto& r : pess.records) {
        CHECK(r.bits == 4LL * 3840);
        CHECK(r.errors == r.bits);
    }
    CHECK(pess.estimation[0].sync_failures == 4);
    c.failure_mode = FailureMode::excluded;
    const auto excl = run_quasi_static(c);
    for (const auto& r : excl.records) {
        CHECK(r.bits == 0);
        CHECK(r.errors == 0);
    }
    CHECK(excl.estimation[0].sync_failures == 4);
}

TEST_CASE("CSV emission and round trip")
{
    const std::vector<BerRecord> one{make_record("chaotic-subopt", "static2", 3.5, 1000, 7)};
    const auto text = to_csv(one);
    CHECK(text == "method,channel,ebn0_db,bits,errors,ber,ci95\nchaotic-subopt,static2,3.5,1000,7,0.007," +
                      fmt_num(one[0].ci95) + "\n");
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);

    std::vector<BerRecord> many;
    for (int k = 0; k < 40; ++k)
        many.push_back(make_record(k % 2 ? "rrc-mmse" : "theory-opt", "static3", 0.1 * k - 1.0 / 3.0,
                                   1000003LL * k, 17LL * k));
    many.push_back({"theory-subopt", "static2", 4.0, 0, 0, 1.234567890123e-7, 0.0});
    CHECK(parse_csv(to_csv(many)) == many);
    CHECK_THROWS_AS(to_csv({}), std::invalid_argument);
    CHECK_THROWS_AS(parse_csv("wrong,header\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_csv(std::string(kCsvHeader) + "\na,b,1,2\n"), std::invalid_argument);
}

TEST_CASE("plot data and file output")
{
    const auto dir = fs::temp_directory_path() / "chaosbb_test_plot";
    fs::remove_all(dir);
    std::vector<BerRecord> recs{make_record("chaotic-subopt", "static2", 6, 100, 1),
                                make_record("chaotic-subopt", "static2", 2, 100, 9),
                                make_record("rrc-mmse", "static2", 4, 100, 5),
                                make_record("chaotic-subopt", "static2", 4, 100, 4)};
    const auto files = write_plotdata(dir, recs);
    REQUIRE(files.size() == 2u);
    const auto text = slurp(dir / "chaotic-subopt_static2.dat");
    std::stringstream ss(text);
    std::string line;
    std::getline(ss, line);
    CHECK(line.front() == '#');
    std::vector<double> x;
    while (std::getline(ss, line))
        x.push_back(std::stod(line.substr(0, line.find(' '))));
    CHECK(x == std::vector<double>{2, 4, 6});

    write_csv(dir / "sub" / "ber.csv", recs);
    CHECK(parse_csv(slurp(dir / "sub" / "ber.csv")) == recs);
    fs::remove_all(dir);

    // A regular file in place of the parent directory cannot be written through.
    const auto blocker = fs::temp_directory_path() / "chaosbb_test_blocker";
    std::ofstream(blocker) << "x";
    CHECK_THROWS(write_csv(blocker / "ber.csv", recs));
    fs::remove(blocker);
}

TEST_CASE("theory curves")
{
    ExperimentConfig c;
    c.channels = {"static2", "static3"};
    c.ebn0_grid = parse_grid("0:1:14");
    const auto recs = run_theory_curves(c);
    REQUIRE(recs.size() == 2u * 15u * 2u);
    auto curve = [&](const std::string& m, const std::string& ch) {
        std::vector<double> v;
        for (const auto& r : recs)
            if (r.method == m && r.channel == ch)
                v.push_back(r.ber);
        return v;
    };
    for (const std::string ch : {"static2", "static3"}) {
        const auto opt = curve("theory-opt", ch), sub = curve("theory-subopt", ch);
        REQUIRE(opt.size() == 15u);
        for (std::size_t k = 0; k < opt.size(); ++k) {
            CHECK(sub[k] >= opt[k]);
            CHECK(opt[k] > 0.0);
            CHECK(sub[k] <= 0.5);
            if (k > 0) {
                CHECK(opt[k] < opt[k - 1]);
                CHECK(sub[k] < sub[k - 1]);
            }
        }
    }
    const auto s2 = curve("theory-subopt", "static2"), s3 = curve("theory-subopt", "static3");
    for (std::size_t k = 0; k < s2.size(); ++k)
        CHECK(s2[k] < s3[k]);

    c.channels = {"quasi2"};
    CHECK_THROWS_AS(run_theory_curves(c), std::invalid_argument);
}

TEST_CASE("genie-aided optimal matches theory on a single path")
{
    // Full pipeline against the analytic optimum, with P and sigma_W taken
    // from the same calibration.
    ExperimentConfig c;
    c.channels = {"single"};
    c.methods = {Method::chaotic_opt};
    c.genie = true;
    c.ebn0_grid = {2.0, 5.0};
    c.bits = 300000;
    c.jobs = 4;
    const auto sim = run_static_sweep(c).records;
    const auto th = run_theory_curves(c);
    for (const auto& r : sim) {
        double expect = 0.0;
        for (const auto& t : th)
            if (t.method == "theory-opt" && t.ebn0_db == r.ebn0_db)
                expect = t.ber;
        const double ci = 1.96 * std::sqrt(expect * (1 - expect) / static_cast<double>(r.bits));
        CHECK(std::abs(r.ber - expect) <= ci);
    }
}

TEST_CASE("bench timing")
{
    auto c = small_quasi();
    c.channels = {"quasi2"};
    c.frames = 3;
    const auto r = run_quasi_static(c, true);
    REQUIRE(r.bench.size() == 6u);
    double total = 0.0;
    for (const auto& [stage, sec] : r.bench)
        total += sec;
    CHECK(total > 0.0);
    CHECK(bench_csv(r.bench).rfind("stage,seconds\n", 0) == 0);
    CHECK(run_quasi_static(c).bench.empty());
}
