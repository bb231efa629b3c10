#pragma once

// Transmitter: framing, constellation mapping, training sequences, shaping
// and NCO upconversion.

#include <chaosbb/random.hpp>
#include <chaosbb/rrc.hpp>
#include <chaosbb/waveform.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chaosbb {

using Bits = std::vector<std::uint8_t>;

enum class Modulation { qpsk, bpsk };
enum class TrainingKind { gold_sequence, stored_pn };

struct FrameLayout
{
    int n_training = 256;
    int n_data = 3840;
    TrainingKind training_kind = TrainingKind::gold_sequence;
    /// Gold codes have length 1023; other lengths take a prefix and must say so.
    bool truncate_training = true;
    Modulation modulation = Modulation::qpsk;

    int rails() const { return modulation == Modulation::qpsk ? 2 : 1; }
    int training_symbols() const { return n_training / rails(); }
    int data_symbols() const { return n_data / rails(); }

    void validate() const
    {
        if (n_training <= 0 || n_data <= 0)
            throw std::invalid_argument("FrameLayout: training and data counts must be positive");
        if (modulation == Modulation::qpsk && (n_training % 2 != 0 || n_data % 2 != 0))
            throw std::invalid_argument("FrameLayout: QPSK needs even training and data bit counts");
    }

    /// Monte Carlo layout: 256 training + 3840 data bits, QPSK.
    static FrameLayout simulation() { return {}; }

    /// Hardware-replay layout: a full 1023-bit Gold code + 3073 data bits.
    /// Both counts are odd, so this preset is BPSK.
    static FrameLayout replay() { return {1023, 3073, TrainingKind::gold_sequence, false, Modulation::bpsk}; }
};

/// Bipolar rails of one frame: training, then data, then n_pad known
/// alternating symbols that define the waveform tail.
struct SymbolFrame
{
    SymbolSeq i_syms;
    SymbolSeq q_syms;  // empty for BPSK
    FrameLayout layout;
    int n_pad = 0;

    int rail_length() const { return static_cast<int>(i_syms.size()); }
};

// ---------------------------------------------------------------------------
// Constellations

inline void check_bits(std::span<const std::uint8_t> bits, const char* who)
{
    if (bits.empty())
        throw std::invalid_argument(std::string(who) + ": empty bit sequence");
    for (auto b : bits)
        if (b > 1)
            throw std::invalid_argument(std::string(who) + ": bits must be 0 or 1");
}

/// Pair (b1, b2) -> q = 1 - 2 b1, i = 1 - 2 (b1 xor b2).
inline std::pair<SymbolSeq, SymbolSeq> qpsk_map(std::span<const std::uint8_t> bits)
{
    check_bits(bits, "qpsk_map");
    if (bits.size() % 2 != 0)
        throw std::invalid_argument("qpsk_map: odd number of bits");
    SymbolSeq i(bits.size() / 2), q(bits.size() / 2);
    for (std::size_t k = 0; k < i.size(); ++k) {
        const int b1 = bits[2 * k];
        const int b2 = bits[2 * k + 1];
        q[k] = 1 - 2 * b1;
        i[k] = 1 - 2 * (b1 ^ b2);
    }
    return {i, q};
}

inline Bits qpsk_demap(std::span<const int> i, std::span<const int> q)
{
    if (i.size() != q.size())
        throw std::invalid_argument("qpsk_demap: rail length mismatch");
    Bits bits(2 * i.size());
    for (std::size_t k = 0; k < i.size(); ++k) {
        const std::uint8_t b1 = q[k] < 0;
        const std::uint8_t bi = i[k] < 0;
        bits[2 * k] = b1;
        bits[2 * k + 1] = b1 ^ bi;
    }
    return bits;
}

inline SymbolSeq bpsk_map(std::span<const std::uint8_t> bits)
{
    check_bits(bits, "bpsk_map");
    SymbolSeq s(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k)
        s[k] = bits[k] ? -1 : 1;
    return s;
}

inline Bits bpsk_demap(std::span<const int> s)
{
    Bits bits(s.size());
    for (std::size_t k = 0; k < s.size(); ++k)
        bits[k] = s[k] < 0;
    return bits;
}

// ---------------------------------------------------------------------------
// Training sequences

/// One period of the degree-10 m-sequence a_{n+10} = xor_{t in taps} a_{n+t},
/// all-ones initial fill.
inline Bits m_sequence10(std::span<const int> taps)
{
    Bits a(1023 + 10, 1);
    for (std::size_t n = 0; n + 10 < a.size(); ++n) {
        std::uint8_t v = 0;
        for (int t : taps)
            v ^= a[n + static_cast<std::size_t>(t)];
        a[n + 10] = v;
    }
    a.resize(1023);
    return a;
}

/// Gold code u xor (v shifted by `shift`) from x^10+x^3+1 and x^10+x^8+x^3+x^2+1.
inline Bits gold_code(int shift)
{
    static const Bits u = m_sequence10(std::array{3, 0});
    static const Bits v = m_sequence10(std::array{8, 3, 2, 0});
    Bits g(1023);
    for (std::size_t n = 0; n < g.size(); ++n)
        g[n] = u[n] ^ v[(n + static_cast<std::size_t>(shift)) % 1023];
    return g;
}

inline Bits gen_training(const FrameLayout& layout, std::uint64_t seed)
{
    layout.validate();
    const auto n = static_cast<std::size_t>(layout.n_training);
    if (layout.training_kind == TrainingKind::stored_pn) {
        std::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
        Bits b(n);
        for (auto& x : b)
            x = static_cast<std::uint8_t>(rng() & 1u);
        return b;
    }
    if (n != 1023 && !layout.truncate_training)
        throw std::invalid_argument("gen_training: Gold codes have length 1023; set truncate_training for " +
                                    std::to_string(n) + " bits");
    if (n > 1023)
        throw std::invalid_argument("gen_training: at most 1023 Gold training bits");
    // First balanced family member at or after the seeded shift.
    int shift = static_cast<int>(seed % 1023);
    Bits g;
    for (int tries = 0; tries < 1023; ++tries, shift = (shift + 1) % 1023) {
        g = gold_code(shift);
        int ones = 0;
        for (auto b : g)
            ones += b;
        if (ones == 511 || ones == 512)
            break;
    }
    g.resize(n);
    return g;
}

inline SymbolSeq alternating_padding(int n)
{
    SymbolSeq p(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        p[static_cast<std::size_t>(k)] = k % 2 ? -1 : 1;
    return p;
}

/// Training bits followed by data bits, mapped per the layout, padded.
inline SymbolFrame build_frame(const FrameLayout& layout, std::span<const std::uint8_t> training,
                               std::span<const std::uint8_t> data, int n_pad)
{
    layout.validate();
    if (static_cast<int>(training.size()) != layout.n_training || static_cast<int>(data.size()) != layout.n_data)
        throw std::invalid_argument("build_frame: bit counts do not match the layout");
    if (n_pad < 0)
        throw std::invalid_argument("build_frame: negative padding");
    Bits all(training.begin(), training.end());
    all.insert(all.end(), data.begin(), data.end());
    SymbolFrame f;
    f.layout = layout;
    f.n_pad = n_pad;
    const auto pad = alternating_padding(n_pad);
    if (layout.modulation == Modulation::qpsk) {
        // Map training and data separately so no pair straddles the boundary.
        auto [ti, tq] = qpsk_map(training);
        auto [di, dq] = qpsk_map(data);
        f.i_syms = std::move(ti);
        f.q_syms = std::move(tq);
        f.i_syms.insert(f.i_syms.end(), di.begin(), di.end());
        f.q_syms.insert(f.q_syms.end(), dq.begin(), dq.end());
        f.q_syms.insert(f.q_syms.end(), pad.begin(), pad.end());
    } else {
        f.i_syms = bpsk_map(all);
    }
    f.i_syms.insert(f.i_syms.end(), pad.begin(), pad.end());
    return f;
}

// ---------------------------------------------------------------------------
// Shaping and upconversion

struct RateConfig
{
    double r_b = 1.0e6;
    int n_c = 8;

    double r_c() const { return r_b * n_c; }
    void validate() const
    {
        if (!(r_b > 0.0))
            throw std::invalid_argument("RateConfig: symbol rate must be positive");
        if (n_c < 2)
            throw std::invalid_argument("RateConfig: oversampling rate must be an integer >= 2");
    }
};

struct CarrierConfig
{
    double f_b = 1.0e6;
    double f_s = 8.0e6;

    double omega0() const { return 2.0 * std::numbers::pi * f_b / f_s; }
    void validate() const
    {
        if (!(f_b > 0.0) || !(f_b < 0.5 * f_s))
            throw std::invalid_argument("CarrierConfig: need 0 < f_b < f_s/2");
    }
};

enum class ShapingFilter { chaotic, rrc };

struct ShapedFrame
{
    std::vector<double> i;
    std::vector<double> q;  // empty for BPSK
    /// Sample index of symbol 0's reference instant.
    std::size_t lead = 0;
};

/// Shapes each rail at n_c samples per symbol over the filter's whole support.
inline ShapedFrame shape(const SymbolFrame& frame, const RateConfig& rates, ShapingFilter filter,
                         const WaveformParams& wp = {}, const RrcFilter* rrc = nullptr)
{
    rates.validate();
    ShapedFrame out;
    auto one = [&](const SymbolSeq& s) {
        if (filter == ShapingFilter::chaotic)
            return synth_waveform_full(s, rates.n_c, wp);
        if (rrc == nullptr)
            throw std::invalid_argument("shape: RRC filter taps required");
        if (rrc->n_c != rates.n_c)
            throw std::invalid_argument("shape: RRC oversampling does not match the rate config");
        return rrc_shape(s, *rrc);
    };
    auto wi = one(frame.i_syms);
    out.i = std::move(wi.samples);
    out.lead = wi.lead;
    if (!frame.q_syms.empty())
        out.q = one(frame.q_syms).samples;
    return out;
}

/// x_D(n) = i(n) cos(w0 n) + q(n) sin(w0 n).
inline std::vector<double> upconvert(std::span<const double> i, std::span<const double> q, const CarrierConfig& c)
{
    c.validate();
    if (i.size() != q.size())
        throw std::invalid_argument("upconvert: i/q length mismatch");
    const double w0 = c.omega0();
    std::vector<double> x(i.size());
    for (std::size_t n = 0; n < i.size(); ++n) {
        const double ph = w0 * static_cast<double>(n);
        x[n] = i[n] * std::cos(ph) + q[n] * std::sin(ph);
    }
    return x;
}

}  // namespace chaosbb
