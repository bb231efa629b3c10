// chaosbb: command-line front end for the sweeps, theory curves and checks.

#include <chaosbb/chaosbb.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace chaosbb;

namespace {

struct CommonFlags
{
    std::string config;
    std::vector<std::string> set;  // key=value overrides, applied after the file
    long long seed = -1;
    std::string out = "results";
    int jobs = 0;
    bool genie = false;
    bool bench = false;
};

void add_common(CLI::App* sub, CommonFlags& f, bool sweep)
{
    sub->add_option("--config", f.config, "Flat key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", f.set, "Override one config key (key=value); repeatable");
    sub->add_option("--seed", f.seed, "Master seed");
    sub->add_option("--out", f.out, "Output directory")->capture_default_str();
    if (sweep) {
        sub->add_option("--jobs", f.jobs, "Worker threads (default: config value)");
        sub->add_flag("--genie", f.genie, "Analysis only: add chaotic-opt with the true symbols and channel");
        sub->add_flag("--bench", f.bench, "Report wall-clock time per pipeline stage");
    }
}

/// Defaults depend on the subcommand; the file and then the flags override them.
ExperimentConfig load(const CommonFlags& f, bool quasi)
{
    ExperimentConfig cfg;
    cfg.channels = quasi ? std::vector<std::string>{"quasi2", "quasi3"} : std::vector<std::string>{"static2", "static3"};
    if (quasi)
        cfg.methods = {Method::chaotic_subopt, Method::rrc_mmse};
    ConfigMap m;
    if (!f.config.empty())
        m = read_config_file(f.config);
    for (const auto& kv : f.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        m[detail::trim(kv.substr(0, eq))] = detail::trim(kv.substr(eq + 1));
    }
    apply_config(m, cfg);
    if (f.seed >= 0)
        cfg.master_seed = static_cast<std::uint64_t>(f.seed);
    if (f.jobs > 0)
        cfg.jobs = f.jobs;
    if (f.genie) {
        cfg.genie = true;
        if (!cfg.has(Method::chaotic_opt))
            cfg.methods.insert(cfg.methods.begin(), Method::chaotic_opt);
    }
    return cfg;
}

void print_records(const std::vector<BerRecord>& recs)
{
    std::printf("%-15s %-8s %7s %10s %8s %12s %10s\n", "method", "channel", "Eb/N0", "bits", "errors", "ber", "ci95");
    for (const auto& r : recs)
        std::printf("%-15s %-8s %7.2f %10lld %8lld %12.4e %10.2e\n", r.method.c_str(), r.channel.c_str(), r.ebn0_db,
                    r.bits, r.errors, r.ber, r.ci95);
}

void emit(const fs::path& dir, const std::string& stem, const SweepResult& res)
{
    write_csv(dir / (stem + ".csv"), res.records);
    write_plotdata(dir / "plotdata", res.records);
    if (!res.estimation.empty())
        write_text(dir / (stem + "_estimation.csv"), estimation_csv(res.estimation));
    if (!res.bench.empty()) {
        const auto text = bench_csv(res.bench);
        write_text(dir / (stem + "_bench.csv"), text);
        std::cout << "\nstage timing (seconds, summed over workers)\n" << text;
    }
    std::cout << "\nwrote " << (dir / (stem + ".csv")).string() << "\n";
}

int sweep(const CommonFlags& f, bool quasi)
{
    const auto cfg = load(f, quasi);
    const auto res = quasi ? run_quasi_static(cfg, f.bench) : run_static_sweep(cfg, f.bench);
    print_records(res.records);
    for (const auto& s : res.estimation)
        if (s.sync_failures + s.estimation_failures > 0)
            std::printf("%s %s %.2f dB: %d sync and %d estimation failures in %d frames\n", s.family.c_str(),
                        s.channel.c_str(), s.ebn0_db, s.sync_failures, s.estimation_failures, s.frames);
    emit(f.out, quasi ? "ber_quasi" : "ber_static", res);
    return 0;
}

int theory(const CommonFlags& f)
{
    const auto cfg = load(f, false);
    const auto recs = run_theory_curves(cfg);
    print_records(recs);
    write_csv(fs::path(f.out) / "theory.csv", recs);
    write_plotdata(fs::path(f.out) / "plotdata", recs);
    std::cout << "\nwrote " << (fs::path(f.out) / "theory.csv").string() << "\n";
    return 0;
}

int conjugacy(double beta, double step, double g)
{
    WaveformParams wp;
    wp.beta = beta;
    const auto r = check_conjugacy(wp, step, g);
    std::printf("beta              %.9g\n", beta);
    std::printf("integral inside   %.6f\n", r.integral_inside);
    std::printf("integral outside  %.6f\n", r.integral_outside);
    std::printf("cond1 (distinct)  %s\n", r.cond1 ? "holds" : "fails");
    std::printf("cond2 margin G=%g %.6f (%s)\n", g, r.cond2_margin, r.cond2_margin > 0 ? "holds" : "fails");
    std::printf("cond3             %s\n", r.cond3 ? "holds" : "fails");
    return r.cond1 && r.cond2_margin > 0 && r.cond3 ? 0 : 1;
}

// Quick end-to-end sanity checks, seconds to run.
int selftest()
{
    int failed = 0;
    auto check = [&](const char* what, bool ok) {
        std::printf("%-52s %s\n", what, ok ? "ok" : "FAILED");
        failed += !ok;
    };
    const WaveformParams wp;
    check("r(0) = 1.3433", std::abs(response_r(0.0, 0.0, 1.0, wp) - 1.3433) < 1e-4);
    check("erfc(1) = 0.1572992070", std::abs(chaosbb::erfc(1.0) - 0.1572992070) < 1e-10);

    const auto mf = matched_filter_taps(8, wp);
    const SymbolSeq one{1};
    const auto w = synth_waveform_full(one, 8, wp);
    check("matched filter peak = r(0)",
          std::abs(matched_filter_at(w.samples, mf, static_cast<long>(w.lead)) - response_r(0.0, 0.0, 1.0, wp)) < 1e-3);

    ExperimentConfig cfg;
    cfg.methods = {Method::chaotic_opt, Method::chaotic_subopt, Method::rrc_mmse};
    cfg.genie = true;
    cfg.channels = {"static3"};
    cfg.ebn0_grid = {200.0};
    cfg.bits = 20000;
    const auto res = run_static_sweep(cfg);
    bool clean = true;
    for (const auto& r : res.records)
        clean = clean && r.errors == 0;
    check("noiseless static3: no errors for opt/subopt/mmse", clean);

    ExperimentConfig q;
    q.channels = {"quasi3"};
    q.methods = {Method::chaotic_subopt, Method::rrc_mmse};
    q.ebn0_grid = {4.0};
    q.frames = 6;
    q.jobs = 1;
    const auto a = to_csv(run_quasi_static(q).records);
    q.jobs = 3;
    const auto b = to_csv(run_quasi_static(q).records);
    check("quasi-static CSV identical at 1 and 3 workers", a == b);
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Chaotic baseband waveform modem: Monte Carlo BER sweeps and analysis"};
    app.require_subcommand(1);

    CommonFlags st, qs, th;
    auto* s1 = app.add_subcommand("sweep-static", "BER sweep over static known channels");
    add_common(s1, st, true);
    auto* s2 = app.add_subcommand("sweep-quasi", "BER sweep over quasi-static channels with LS estimation");
    add_common(s2, qs, true);
    auto* s3 = app.add_subcommand("theory", "Analytic BER curves for static channels");
    add_common(s3, th, false);

    double beta = std::numbers::ln2, step = 1e-4, g = 5.0;
    auto* s4 = app.add_subcommand("check-conjugacy", "Evaluate the topological conjugacy conditions");
    s4->add_option("--beta", beta, "Damping parameter")->capture_default_str();
    s4->add_option("--grid-step", step, "Quadrature step")->capture_default_str();
    s4->add_option("--bound", g, "Bound constant G of condition 2")->capture_default_str();

    auto* s5 = app.add_subcommand("selftest", "Fast end-to-end sanity checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (s1->parsed())
            return sweep(st, false);
        if (s2->parsed())
            return sweep(qs, true);
        if (s3->parsed())
            return theory(th);
        if (s4->parsed())
            return conjugacy(beta, step, g);
        if (s5->parsed())
            return selftest();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
