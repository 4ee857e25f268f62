#pragma once

#include <cstdint>
#include <vector>

#include "irsotfs/linalg.hpp"

namespace irsotfs {

/**
 * 4^Q-QAM alphabet with per-axis Gray labeling.
 *
 * Component levels are the odd integers {+-1, +-3, ..., +-(2^Q - 1)},
 * used unnormalized; SNR definitions divide by the average symbol
 * energy instead. Per axis the Gray table maps bits (MSB first) to
 * levels so that bit pattern 0..0 gives the most positive level:
 * Q=1: 0 -> +1, 1 -> -1; Q=2: 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3.
 * A symbol's bits are the real-axis bits followed by the imaginary-axis
 * bits.
 */
struct QamAlphabet {
    int q = 1;
    std::vector<cd> points;  // lexicographic by (re, im)

    explicit QamAlphabet(int levels_exp);
    static QamAlphabet qpsk() { return QamAlphabet(1); }

    int bits_per_symbol() const { return 2 * q; }
    double avg_energy() const;
    cd map_bits(const std::uint8_t* bits) const;
    void demap_symbol(cd s, std::uint8_t* bits) const;
    /// Nearest constellation point; ties break toward the smaller real
    /// then smaller imaginary coordinate.
    cd quantize(cd s) const;
    bool contains(cd s) const;

private:
    double level_from_bits(const std::uint8_t* bits) const;
    void bits_from_level(double level, std::uint8_t* bits) const;
};

CVec qam_map(const std::vector<std::uint8_t>& bits, const QamAlphabet& alphabet);
std::vector<std::uint8_t> qam_demap(const CVec& symbols, const QamAlphabet& alphabet);

/// Splits a 4^Q-QAM vector into Q QPSK-valued vectors a_q with
/// sum_q 2^{q-1} a_q = a exactly. Rejects entries outside the alphabet.
std::vector<CVec> binary_decompose(const CVec& a, const QamAlphabet& alphabet);

struct AdmmConfig {
    double rho = 2.0;    // penalty
    double alpha = 0.5;  // box-relaxation regularizer, must stay below rho
    int max_iter = 40;
    double tol = 1e-6;   // primal-residual stop, scaled by sqrt(dim)
    bool record_iterates = false;

    void validate() const;
};

struct AdmmResult {
    CVec symbols;                   // quantized decision
    CVec relaxed;                   // final a_0 before quantization
    std::vector<double> residuals;  // primal residual per iteration
    std::vector<CVec> iterates;     // a_0 per iteration when recorded
    int iterations = 0;
};

/**
 * ADMM box-relaxation detector for y = H a + z.
 *
 * Iterates the closed-form box projection, the cached-factor linear
 * solve with (H^H H + rho I), and the dual ascent step. For Q > 1 the
 * same updates run sequentially over the Q binary layers with the
 * recomposition constraint a_0 = sum_q 2^{q-1} a_q.
 */
AdmmResult admm_detect(const CMat& h, const CVec& y, const QamAlphabet& alphabet,
                       const AdmmConfig& cfg);

/// Linear MMSE: quantize((H^H H + sigma2 I)^{-1} H^H y).
CVec mmse_detect(const CMat& h, const CVec& y, double sigma2,
                 const QamAlphabet& alphabet);

/// Exact maximum-likelihood detection by full enumeration. Guarded to
/// at most 12 symbols; ties break first-found in lexicographic
/// constellation order.
CVec ml_oracle(const CMat& h, const CVec& y, const QamAlphabet& alphabet);

enum class DetectorKind { Admm, Mmse };

/// Complex-multiplication count: setup cost (Gram matrix, inverse,
/// matched filter) plus, for ADMM, the per-iteration matrix-vector and
/// scalar work.
long long op_count(DetectorKind kind, int n_t, int n_r, int n_doppler, int n_delay,
                   int iterations = 0);

}  // namespace irsotfs
