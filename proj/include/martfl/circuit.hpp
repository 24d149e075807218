#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "martfl/bytes.hpp"
#include "martfl/quant.hpp"

namespace martfl {

using int128 = __int128;
using uint128 = unsigned __int128;

struct OverflowError : std::runtime_error {
    size_t coordinate;
    std::string magnitude;
    OverflowError(size_t coord, const std::string& mag)
        : std::runtime_error("integer overflow at coordinate " + std::to_string(coord) +
                             " (magnitude " + mag + ")"),
          coordinate(coord),
          magnitude(mag) {}
};

namespace detail {

inline std::string i128_to_string(int128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    uint128 u = neg ? static_cast<uint128>(-(v + 1)) + 1 : static_cast<uint128>(v);
    std::string out;
    while (u > 0) {
        out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
        u /= 10;
    }
    return neg ? "-" + out : out;
}

/// round-half-away-from-zero to the nearest integer, checked against i64.
inline int64_t checked_llround(double x, size_t coord = 0) {
    double r = std::nearbyint(x >= 0 ? x + 0.0 : x);  // llround below does the rounding
    (void)r;
    if (!(x > -9.0e18 && x < 9.0e18)) throw OverflowError(coord, std::to_string(x));
    return static_cast<int64_t>(std::llround(x));
}

}  // namespace detail

/// Integer public parameters of the aggregation circuit, derived once from
/// the operand quantization parameters. The floating scales are replaced by a
/// single 2^eta-scaled unsigned multiplier rounded once, and the K/U zero
/// points are rounded to integers; both roundings are part of the public
/// parameters, so prover and verifier agree bit-exactly.
struct AggScales {
    int eta = 22;
    uint64_t mult = 0;    // round(2^eta * K.s * U.s / out.s)
    int64_t kz = 0;       // round(K.z)
    int64_t uz = 0;       // round(U.z)
    int64_t z_out = 0;    // round(2^eta * out.z)
    uint32_t out_aq = 0;
    uint32_t out_bq = 0;

    static AggScales derive(const QuantParams& k, const QuantParams& u, const QuantParams& out,
                            int eta) {
        if (eta < 22) throw std::invalid_argument("AggScales: eta >= 22");
        AggScales s;
        s.eta = eta;
        double pow_eta = std::ldexp(1.0, eta);
        double mult = pow_eta * k.s * u.s / out.s;
        if (!(mult >= 0.0) || mult > 1.8e19) throw OverflowError(0, std::to_string(mult));
        s.mult = static_cast<uint64_t>(std::llround(mult));
        s.kz = detail::checked_llround(k.z);
        s.uz = detail::checked_llround(u.z);
        s.z_out = detail::checked_llround(pow_eta * out.z);
        s.out_aq = out.a_q;
        s.out_bq = out.b_q;
        return s;
    }
};

/// Integer public parameters of the update circuit. All four N-terms carry
/// the 2^eta scaling; the constant terms N2/N4 are rounded once with their
/// zero points folded in, so no precision is lost to integer zero points here.
struct UpdScales {
    int eta = 22;
    uint64_t mult_w = 0;  // round(2^eta * W.s / out.s)
    uint64_t mult_u = 0;  // round(2^eta * U'.s / out.s)
    int64_t n2 = 0;       // round(2^eta * (W.s / out.s) * W.z)
    int64_t n4 = 0;       // round(2^eta * (U'.s / out.s) * U'.z)
    int64_t z_out = 0;    // round(2^eta * out.z)
    uint32_t out_aq = 0;
    uint32_t out_bq = 0;

    static UpdScales derive(const QuantParams& w, const QuantParams& u_agg,
                            const QuantParams& out, int eta) {
        if (eta < 22) throw std::invalid_argument("UpdScales: eta >= 22");
        UpdScales s;
        s.eta = eta;
        double pow_eta = std::ldexp(1.0, eta);
        double mw = pow_eta * w.s / out.s;
        double mu = pow_eta * u_agg.s / out.s;
        if (!(mw >= 0.0) || mw > 1.8e19) throw OverflowError(0, std::to_string(mw));
        if (!(mu >= 0.0) || mu > 1.8e19) throw OverflowError(0, std::to_string(mu));
        s.mult_w = static_cast<uint64_t>(std::llround(mw));
        s.mult_u = static_cast<uint64_t>(std::llround(mu));
        s.n2 = detail::checked_llround(pow_eta * (w.s / out.s) * w.z);
        s.n4 = detail::checked_llround(pow_eta * (u_agg.s / out.s) * u_agg.z);
        s.z_out = detail::checked_llround(pow_eta * out.z);
        s.out_aq = out.a_q;
        s.out_bq = out.b_q;
        return s;
    }
};

/// Per-coordinate integer evidence that the quantized identities hold.
/// m2/m4 (and n2/n4) are column-independent and therefore stored once.
struct AggregationTrace {
    int eta = 22;
    std::vector<uint64_t> m1;  // sum_k Kq_k * Uq_kj
    int64_t m2 = 0;            // uz * sum_k Kq_k
    std::vector<int64_t> m3;   // kz * sum_k Uq_kj
    int64_t m4 = 0;            // n * kz * uz
    std::vector<uint64_t> n1;  // mult_w * Wq_j (update circuit only)
    int64_t n2 = 0;
    std::vector<uint64_t> n3;  // mult_u * U'q_j (update circuit only)
    int64_t n4 = 0;
    std::vector<uint64_t> remainder;  // R^a or R^u, in [0, 2^eta)
    std::vector<uint8_t> negative;    // sign-flag slot per coordinate
    std::vector<uint8_t> saturated;   // output clamped to the quant range
};

namespace detail {

struct ColumnResult {
    uint32_t q = 0;
    uint64_t remainder = 0;
    bool negative = false;
    bool saturated = false;
};

/// Ceiling division by 2^eta: 2^eta * quotient = remainder + acc with the
/// remainder in [0, 2^eta), matching the published identity form.
inline void ceil_shift(int128 acc, int eta, int128& quotient, uint64_t& remainder) {
    quotient = (acc + (static_cast<int128>(1) << eta) - 1) >> eta;  // arithmetic shift (C++20)
    remainder = static_cast<uint64_t>((quotient << eta) - acc);
}

inline ColumnResult finish_column(int128 scaled, int64_t z_out, int eta, uint32_t aq, uint32_t bq,
                                  size_t coord) {
    constexpr int128 kLimit = (static_cast<int128>(1) << 120);
    if (scaled > kLimit || scaled < -kLimit)
        throw OverflowError(coord, i128_to_string(scaled));
    ColumnResult res;
    res.negative = scaled < 0;
    int128 acc = static_cast<int128>(z_out) + scaled;
    int128 q128;
    detail::ceil_shift(acc, eta, q128, res.remainder);
    if (q128 < static_cast<int128>(aq)) {
        res.q = aq;
        res.saturated = true;
    } else if (q128 > static_cast<int128>(bq)) {
        res.q = bq;
        res.saturated = true;
    } else {
        res.q = static_cast<uint32_t>(static_cast<int64_t>(q128));
    }
    return res;
}

}  // namespace detail

/// Evaluate one output coordinate of the aggregation circuit. Returns the
/// quantized output plus the exact identity witness for that column:
///   2^eta * q = R + z_out + mult * (M1 + M4 - M2 - M3)
/// The combination is accumulated as (M1 + M4) and (M2 + M3) separately and
/// only then subtracted; a negative difference sets the sign flag instead of
/// aborting.
struct AggColumn {
    uint32_t q = 0;
    uint64_t m1 = 0;
    int64_t m3 = 0;
    uint64_t remainder = 0;
    bool negative = false;
    bool saturated = false;
};

inline AggColumn aggregate_column(const std::vector<uint32_t>& kq,
                                  const std::vector<uint32_t>& u_col, const AggScales& s,
                                  size_t coord = 0) {
    if (kq.size() != u_col.size() || kq.empty())
        throw std::invalid_argument("aggregate_column: dimension mismatch");
    const size_t n = kq.size();
    uint64_t m1 = 0, sk = 0, su = 0;
    for (size_t k = 0; k < n; ++k) {
        m1 += static_cast<uint64_t>(kq[k]) * u_col[k];
        sk += kq[k];
        su += u_col[k];
    }
    int128 m2 = static_cast<int128>(s.uz) * static_cast<int128>(sk);
    int128 m3 = static_cast<int128>(s.kz) * static_cast<int128>(su);
    int128 m4 = static_cast<int128>(n) * s.kz * s.uz;
    int128 combo = static_cast<int128>(m1) + m4 - m2 - m3;
    int128 scaled = static_cast<int128>(s.mult) * combo;

    auto col = detail::finish_column(scaled, s.z_out, s.eta, s.out_aq, s.out_bq, coord);
    AggColumn out;
    out.q = col.q;
    out.m1 = m1;
    out.m3 = static_cast<int64_t>(m3);
    out.remainder = col.remainder;
    out.negative = combo < 0;
    out.saturated = col.saturated;
    return out;
}

struct UpdColumn {
    uint32_t q = 0;
    uint64_t n1 = 0;
    uint64_t n3 = 0;
    uint64_t remainder = 0;
    bool negative = false;
    bool saturated = false;
};

inline UpdColumn update_column(uint32_t wq_prev, uint32_t uq_agg, const UpdScales& s,
                               size_t coord = 0) {
    uint64_t n1 = s.mult_w * static_cast<uint64_t>(wq_prev);
    uint64_t n3 = s.mult_u * static_cast<uint64_t>(uq_agg);
    int128 combo = static_cast<int128>(n1) + static_cast<int128>(n3) - s.n2 - s.n4;

    auto col = detail::finish_column(combo, s.z_out, s.eta, s.out_aq, s.out_bq, coord);
    UpdColumn out;
    out.q = col.q;
    out.n1 = n1;
    out.n3 = n3;
    out.remainder = col.remainder;
    out.negative = combo < 0;
    out.saturated = col.saturated;
    return out;
}

/// Quantized aggregation U' = K * U over all m output coordinates.
inline std::pair<QuantTensor, AggregationTrace> quantized_aggregate(const QuantTensor& kq,
                                                                    const QuantTensor& uq,
                                                                    const QuantParams& out_params,
                                                                    int eta) {
    if (kq.rows != 1 || kq.cols != uq.rows || uq.rows == 0)
        throw std::invalid_argument("quantized_aggregate: K must be 1 x n, U must be n x m");
    const size_t n = uq.rows;
    const size_t m = uq.cols;
    AggScales scales = AggScales::derive(kq.params, uq.params, out_params, eta);

    QuantTensor out;
    out.rows = 1;
    out.cols = m;
    out.params = out_params;
    out.q.resize(m);

    AggregationTrace trace;
    trace.eta = eta;
    trace.m1.resize(m);
    trace.m3.resize(m);
    trace.remainder.resize(m);
    trace.negative.resize(m);
    trace.saturated.resize(m);

    uint64_t sk = 0;
    for (uint32_t v : kq.q) sk += v;
    trace.m2 = static_cast<int64_t>(scales.uz * static_cast<int64_t>(sk));
    trace.m4 = static_cast<int64_t>(static_cast<int64_t>(n) * scales.kz * scales.uz);

    std::vector<uint32_t> u_col(n);
    for (size_t j = 0; j < m; ++j) {
        for (size_t k = 0; k < n; ++k) u_col[k] = uq.at(k, j);
        auto col = aggregate_column(kq.q, u_col, scales, j);
        out.q[j] = col.q;
        trace.m1[j] = col.m1;
        trace.m3[j] = col.m3;
        trace.remainder[j] = col.remainder;
        trace.negative[j] = col.negative ? 1 : 0;
        trace.saturated[j] = col.saturated ? 1 : 0;
    }
    return {std::move(out), std::move(trace)};
}

/// Quantized update W = W_prev + U' over all m coordinates.
inline std::pair<QuantTensor, AggregationTrace> quantized_update(const QuantTensor& wq_prev,
                                                                 const QuantTensor& uq_agg,
                                                                 const QuantParams& out_params,
                                                                 int eta) {
    if (wq_prev.rows != 1 || uq_agg.rows != 1 || wq_prev.cols != uq_agg.cols)
        throw std::invalid_argument("quantized_update: operands must be 1 x m");
    const size_t m = wq_prev.cols;
    UpdScales scales = UpdScales::derive(wq_prev.params, uq_agg.params, out_params, eta);

    QuantTensor out;
    out.rows = 1;
    out.cols = m;
    out.params = out_params;
    out.q.resize(m);

    AggregationTrace trace;
    trace.eta = eta;
    trace.n1.resize(m);
    trace.n3.resize(m);
    trace.remainder.resize(m);
    trace.negative.resize(m);
    trace.saturated.resize(m);
    trace.n2 = scales.n2;
    trace.n4 = scales.n4;

    for (size_t j = 0; j < m; ++j) {
        auto col = update_column(wq_prev.q[j], uq_agg.q[j], scales, j);
        out.q[j] = col.q;
        trace.n1[j] = col.n1;
        trace.n3[j] = col.n3;
        trace.remainder[j] = col.remainder;
        trace.negative[j] = col.negative ? 1 : 0;
        trace.saturated[j] = col.saturated ? 1 : 0;
    }
    return {std::move(out), std::move(trace)};
}

/// Exact re-check of the aggregation identity at one coordinate:
///   2^eta * q == R + z_out + mult * (M1 + M4 - M2 - M3)
inline bool aggregate_identity_holds(const std::vector<uint32_t>& kq,
                                     const std::vector<uint32_t>& u_col, uint32_t q,
                                     uint64_t remainder, bool negative, const AggScales& s) {
    if (remainder >= (static_cast<uint64_t>(1) << s.eta)) return false;
    uint64_t m1 = 0, sk = 0, su = 0;
    for (size_t k = 0; k < kq.size(); ++k) {
        m1 += static_cast<uint64_t>(kq[k]) * u_col[k];
        sk += kq[k];
        su += u_col[k];
    }
    int128 combo = static_cast<int128>(m1) + static_cast<int128>(kq.size()) * s.kz * s.uz -
                   static_cast<int128>(s.uz) * static_cast<int128>(sk) -
                   static_cast<int128>(s.kz) * static_cast<int128>(su);
    if ((combo < 0) != negative) return false;
    int128 lhs = static_cast<int128>(q) << s.eta;
    int128 rhs = static_cast<int128>(remainder) + s.z_out + static_cast<int128>(s.mult) * combo;
    return lhs == rhs;
}

inline bool update_identity_holds(uint32_t wq_prev, uint32_t uq_agg, uint32_t q,
                                  uint64_t remainder, bool negative, const UpdScales& s) {
    if (remainder >= (static_cast<uint64_t>(1) << s.eta)) return false;
    int128 combo = static_cast<int128>(s.mult_w) * wq_prev +
                   static_cast<int128>(s.mult_u) * uq_agg - s.n2 - s.n4;
    if ((combo < 0) != negative) return false;
    int128 lhs = static_cast<int128>(q) << s.eta;
    int128 rhs = static_cast<int128>(remainder) + s.z_out + combo;
    return lhs == rhs;
}

}  // namespace martfl
