#pragma once

// Experiment configuration: a flat `key = value` file, '#' starts a comment.

#include <chaosbb/channel.hpp>
#include <chaosbb/tx.hpp>
#include <chaosbb/waveform.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chaosbb {

enum class Method { chaotic_opt, chaotic_subopt, chaotic_zero, rrc_mmse, rrc_noeq, theory_opt, theory_subopt };

inline const char* method_name(Method m)
{
    switch (m) {
    case Method::chaotic_opt: return "chaotic-opt";
    case Method::chaotic_subopt: return "chaotic-subopt";
    case Method::chaotic_zero: return "chaotic-zero";
    case Method::rrc_mmse: return "rrc-mmse";
    case Method::rrc_noeq: return "rrc-noeq";
    case Method::theory_opt: return "theory-opt";
    case Method::theory_subopt: return "theory-subopt";
    }
    return "?";
}

inline Method parse_method(const std::string& s)
{
    for (auto m : {Method::chaotic_opt, Method::chaotic_subopt, Method::chaotic_zero, Method::rrc_mmse,
                   Method::rrc_noeq, Method::theory_opt, Method::theory_subopt})
        if (s == method_name(m))
            return m;
    throw std::invalid_argument("unknown method '" + s + "'");
}

inline bool is_chaotic(Method m)
{
    return m == Method::chaotic_opt || m == Method::chaotic_subopt || m == Method::chaotic_zero;
}
inline bool is_rrc(Method m) { return m == Method::rrc_mmse || m == Method::rrc_noeq; }
inline bool is_theory(Method m) { return m == Method::theory_opt || m == Method::theory_subopt; }

enum class FailureMode { pessimistic, excluded };

struct ExperimentConfig
{
    std::vector<Method> methods{Method::chaotic_subopt, Method::chaotic_zero, Method::rrc_mmse};
    std::vector<std::string> channels{"static2"};
    std::vector<double> ebn0_grid{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    FrameLayout layout = FrameLayout::simulation();
    /// Static sweeps stop after this many data bits per point.
    long long bits = 500000;
    /// Quasi-static sweeps run this many frames per point.
    int frames = 500;
    std::uint64_t master_seed = 1;
    /// Analysis-only: hands the receiver the true symbols and channel.
    bool genie = false;
    int jobs = 1;

    int n_c = 8;
    WaveformParams wave;
    double rrc_rolloff = 0.25;
    int rrc_span = 16;
    int eq_length = 15;
    int eq_delay = 7;

    int ls_max_delay = 3;
    double ls_detect = 0.05;
    int ls_guard = 20;
    int max_offset = 127;
    int sync_search = 256;
    double sync_ratio = 1.5;
    FailureMode failure_mode = FailureMode::pessimistic;
    double gamma_min = 0.3;
    double gamma_max = 0.9;

    bool has(Method m) const
    {
        for (auto x : methods)
            if (x == m)
                return true;
        return false;
    }

    void validate() const
    {
        if (methods.empty())
            throw std::invalid_argument("config: no methods");
        if (channels.empty())
            throw std::invalid_argument("config: no channels");
        if (ebn0_grid.empty())
            throw std::invalid_argument("config: empty Eb/N0 grid");
        for (double e : ebn0_grid)
            if (!std::isfinite(e))
                throw std::invalid_argument("config: non-finite Eb/N0 point");
        if (bits <= 0 || frames <= 0)
            throw std::invalid_argument("config: bits and frames must be positive");
        if (jobs < 1)
            throw std::invalid_argument("config: jobs must be >= 1");
        if (genie && !has(Method::chaotic_opt))
            throw std::invalid_argument("config: genie mode applies only to chaotic-opt");
        if (has(Method::chaotic_opt) && !genie)
            throw std::invalid_argument("config: chaotic-opt needs the true symbols; enable genie (analysis only)");
        if (max_offset < 0 || sync_search <= max_offset)
            throw std::invalid_argument("config: sync search window must exceed the largest frame offset");
        if (eq_length < 1 || eq_delay < 0 || eq_delay >= eq_length)
            throw std::invalid_argument("config: need 0 <= eq_delay < eq_length");
        layout.validate();
        wave.validate();
        QuasiStaticModel{gamma_min, gamma_max, {}}.validate();
        for (const auto& c : channels)
            channel_preset(c);
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v)
{
    double x = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end)
        throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
    return x;
}

inline long long to_int(const std::string& key, const std::string& v)
{
    long long x = 0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end)
        throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
    return x;
}

inline bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace detail

/// "a:step:b" (inclusive) or a comma list.
inline std::vector<double> parse_grid(const std::string& s)
{
    const auto parts = detail::split(s, ':');
    if (parts.size() == 3 && s.find(',') == std::string::npos) {
        const double a = detail::to_double("ebn0", parts[0]);
        const double st = detail::to_double("ebn0", parts[1]);
        const double b = detail::to_double("ebn0", parts[2]);
        if (!(st > 0.0) || b < a)
            throw std::invalid_argument("config: bad Eb/N0 range '" + s + "'");
        std::vector<double> g;
        const long n = std::lround(std::floor((b - a) / st + 1e-9));
        for (long k = 0; k <= n; ++k)
            g.push_back(a + static_cast<double>(k) * st);
        return g;
    }
    std::vector<double> g;
    for (const auto& p : detail::split(s, ','))
        g.push_back(detail::to_double("ebn0", p));
    return g;
}

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config_text(const std::string& text)
{
    ConfigMap m;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos)
            line.resize(h);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        m[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return m;
}

inline ConfigMap read_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline void apply_config(const ConfigMap& m, ExperimentConfig& c)
{
    using namespace detail;
    for (const auto& [k, v] : m) {
        if (k == "methods") {
            c.methods.clear();
            for (const auto& s : split(v, ','))
                c.methods.push_back(parse_method(s));
        } else if (k == "channels" || k == "channel") {
            c.channels = split(v, ',');
        } else if (k == "ebn0_db") {
            c.ebn0_grid = parse_grid(v);
        } else if (k == "layout") {
            if (v == "simulation")
                c.layout = FrameLayout::simulation();
            else if (v == "replay")
                c.layout = FrameLayout::replay();
            else
                throw std::invalid_argument("config: layout must be simulation or replay");
        } else if (k == "n_training") {
            c.layout.n_training = static_cast<int>(to_int(k, v));
        } else if (k == "n_data") {
            c.layout.n_data = static_cast<int>(to_int(k, v));
        } else if (k == "training") {
            if (v == "gold")
                c.layout.training_kind = TrainingKind::gold_sequence;
            else if (v == "stored_pn")
                c.layout.training_kind = TrainingKind::stored_pn;
            else
                throw std::invalid_argument("config: training must be gold or stored_pn");
        } else if (k == "truncate_training") {
            c.layout.truncate_training = to_bool(k, v);
        } else if (k == "modulation") {
            if (v == "qpsk")
                c.layout.modulation = Modulation::qpsk;
            else if (v == "bpsk")
                c.layout.modulation = Modulation::bpsk;
            else
                throw std::invalid_argument("config: modulation must be qpsk or bpsk");
        } else if (k == "bits") {
            c.bits = to_int(k, v);
        } else if (k == "frames") {
            c.frames = static_cast<int>(to_int(k, v));
        } else if (k == "seed") {
            c.master_seed = static_cast<std::uint64_t>(to_int(k, v));
        } else if (k == "genie") {
            c.genie = to_bool(k, v);
        } else if (k == "jobs") {
            c.jobs = static_cast<int>(to_int(k, v));
        } else if (k == "n_c") {
            c.n_c = static_cast<int>(to_int(k, v));
        } else if (k == "beta") {
            c.wave.beta = to_double(k, v);
        } else if (k == "n_p") {
            c.wave.n_p = static_cast<int>(to_int(k, v));
        } else if (k == "rrc_rolloff") {
            c.rrc_rolloff = to_double(k, v);
        } else if (k == "rrc_span") {
            c.rrc_span = static_cast<int>(to_int(k, v));
        } else if (k == "eq_length") {
            c.eq_length = static_cast<int>(to_int(k, v));
        } else if (k == "eq_delay") {
            c.eq_delay = static_cast<int>(to_int(k, v));
        } else if (k == "ls_max_delay") {
            c.ls_max_delay = static_cast<int>(to_int(k, v));
        } else if (k == "ls_detect") {
            c.ls_detect = to_double(k, v);
        } else if (k == "ls_guard") {
            c.ls_guard = static_cast<int>(to_int(k, v));
        } else if (k == "max_offset") {
            c.max_offset = static_cast<int>(to_int(k, v));
        } else if (k == "sync_search") {
            c.sync_search = static_cast<int>(to_int(k, v));
        } else if (k == "sync_ratio") {
            c.sync_ratio = to_double(k, v);
        } else if (k == "failure_mode") {
            if (v == "pessimistic")
                c.failure_mode = FailureMode::pessimistic;
            else if (v == "excluded")
                c.failure_mode = FailureMode::excluded;
            else
                throw std::invalid_argument("config: failure_mode must be pessimistic or excluded");
        } else if (k == "gamma_min") {
            c.gamma_min = to_double(k, v);
        } else if (k == "gamma_max") {
            c.gamma_max = to_double(k, v);
        } else {
            throw std::invalid_argument("config: unknown key '" + k + "'");
        }
    }
}

}  // namespace chaosbb
