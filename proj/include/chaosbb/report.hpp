#pragma once

// CSV and plot-data output for BER records, plus the CSV reader used for
// round-trip checks. Numbers go through std::to_chars (shortest round-trip
// form, '.' decimal separator regardless of locale).

#include <chaosbb/experiment.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace chaosbb {

inline constexpr const char* kCsvHeader = "method,channel,ebn0_db,bits,errors,ber,ci95";

inline std::string fmt_num(double x)
{
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc())
        throw std::runtime_error("fmt_num: conversion failed");
    return std::string(buf, p);
}

inline std::string fmt_num(long long x)
{
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc())
        throw std::runtime_error("fmt_num: conversion failed");
    return std::string(buf, p);
}

inline std::string to_csv(const std::vector<BerRecord>& records)
{
    if (records.empty())
        throw std::invalid_argument("to_csv: no records");
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : records) {
        if (r.method.find(',') != std::string::npos || r.channel.find(',') != std::string::npos)
            throw std::invalid_argument("to_csv: method/channel names may not contain commas");
        out += r.method + ',' + r.channel + ',' + fmt_num(r.ebn0_db) + ',' + fmt_num(r.bits) + ',' +
               fmt_num(r.errors) + ',' + fmt_num(r.ber) + ',' + fmt_num(r.ci95) + '\n';
    }
    return out;
}

inline std::vector<BerRecord> parse_csv(const std::string& text)
{
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) || line != kCsvHeader)
        throw std::invalid_argument("parse_csv: missing or unexpected header");
    auto num = [](const std::string& s, auto& v) {
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            throw std::invalid_argument("parse_csv: bad number '" + s + "'");
    };
    std::vector<BerRecord> out;
    while (std::getline(ss, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        if (f.size() != 7)
            throw std::invalid_argument("parse_csv: expected 7 fields in '" + line + "'");
        BerRecord r;
        r.method = f[0];
        r.channel = f[1];
        num(f[2], r.ebn0_db);
        num(f[3], r.bits);
        num(f[4], r.errors);
        num(f[5], r.ber);
        num(f[6], r.ci95);
        out.push_back(std::move(r));
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f)
        throw std::runtime_error("write failed for " + path.string());
}

inline void write_csv(const std::filesystem::path& path, const std::vector<BerRecord>& records)
{
    write_text(path, to_csv(records));
}

/// One `<method>_<channel>.dat` per curve: ebn0_db ber ci95 bits errors,
/// rows ascending in Eb/N0. Returns the files written.
inline std::vector<std::filesystem::path> write_plotdata(const std::filesystem::path& dir,
                                                         const std::vector<BerRecord>& records)
{
    if (records.empty())
        throw std::invalid_argument("write_plotdata: no records");
    std::map<std::string, std::vector<BerRecord>> curves;
    for (const auto& r : records)
        curves[r.method + "_" + r.channel].push_back(r);
    std::vector<std::filesystem::path> files;
    for (auto& [name, rows] : curves) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const BerRecord& a, const BerRecord& b) { return a.ebn0_db < b.ebn0_db; });
        std::string text = "# ebn0_db ber ci95 bits errors\n";
        for (const auto& r : rows)
            text += fmt_num(r.ebn0_db) + ' ' + fmt_num(r.ber) + ' ' + fmt_num(r.ci95) + ' ' + fmt_num(r.bits) + ' ' +
                    fmt_num(r.errors) + '\n';
        files.push_back(dir / (name + ".dat"));
        write_text(files.back(), text);
    }
    return files;
}

inline std::string estimation_csv(const std::vector<EstimationStats>& stats)
{
    std::string out = "family,channel,ebn0_db,frames,sync_failures,estimation_failures,gain_rms_mean,gain_rms_max,"
                      "noise_ratio_mean\n";
    for (const auto& s : stats)
        out += s.family + ',' + s.channel + ',' + fmt_num(s.ebn0_db) + ',' + fmt_num(static_cast<long long>(s.frames)) +
               ',' + fmt_num(static_cast<long long>(s.sync_failures)) + ',' +
               fmt_num(static_cast<long long>(s.estimation_failures)) + ',' + fmt_num(s.gain_rms_mean) + ',' +
               fmt_num(s.gain_rms_max) + ',' + fmt_num(s.noise_ratio_mean) + '\n';
    return out;
}

inline std::string bench_csv(const std::vector<std::pair<std::string, double>>& bench)
{
    std::string out = "stage,seconds\n";
    double total = 0.0;
    for (const auto& [stage, sec] : bench) {
        out += stage + ',' + fmt_num(sec) + '\n';
        total += sec;
    }
    out += "total," + fmt_num(total) + '\n';
    return out;
}

}  // namespace chaosbb
