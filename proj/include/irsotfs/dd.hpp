#pragma once

#include "irsotfs/linalg.hpp"

namespace irsotfs {

/**
 * Delay-Doppler grid geometry.
 *
 * M delay bins, N Doppler bins, M_cp cyclic-prefix samples per OFDM
 * symbol. One OTFS frame is N OFDM symbols of M samples each plus CP.
 */
struct GridDims {
    int M = 1;     // delay bins (samples per OFDM symbol)
    int N = 1;     // Doppler bins (OFDM symbols per frame)
    int M_cp = 0;  // cyclic-prefix length, 0 <= M_cp < M

    void validate() const;
    int symbol_len() const { return M + M_cp; }
    int frame_len() const { return N * (M + M_cp); }
};

/// M x N complex grid of delay-Doppler symbols (delay along rows).
/// vec() follows Eigen's column-major order, so the delay index runs
/// fastest; every module uses this single vectorization convention.
struct DdFrame {
    GridDims dims;
    CMat grid;  // M x N

    void validate() const;
    static DdFrame zero(GridDims d) { return {d, CMat::Zero(d.M, d.N)}; }
};

/// Per-OFDM-symbol time samples: column n holds s_n, of length M or
/// M + M_cp when the CP is attached.
struct TimeFrame {
    GridDims dims;
    bool has_cp = false;
    CMat samples;  // (M or M+M_cp) x N

    void validate() const;
    /// Samples with the cyclic prefix removed (M x N).
    CMat core() const;
};

/// ISFFT: A^FT = F_M * A^DD * F_N^H with unitary DFT matrices, so the
/// transform preserves Frobenius norm exactly.
CMat isfft(const DdFrame& frame);

/// Inverse of isfft.
DdFrame sfft(const CMat& ft, int m_cp = 0);

/**
 * OTFS modulator (rectangular pulses).
 *
 * The per-symbol OFDM IFFT cancels the ISFFT's delay-axis DFT, so the
 * time samples are S = A^DD * F_N^H directly; a CP of M_cp samples is
 * then prepended per symbol by copying the symbol tail.
 */
TimeFrame otfs_modulate(const DdFrame& frame);

/// OTFS demodulator: strips the CP if present and returns Y^DD = R * F_N.
/// Exact inverse of otfs_modulate over an identity channel.
DdFrame otfs_demodulate(const TimeFrame& rx);

/// Applies the per-symbol channel matrices to the CP-stripped symbols:
/// r_n = H_n s_n. The cyclic-shift channel model already accounts for
/// the CP absorbing inter-symbol interference.
TimeFrame channel_apply(const std::vector<CMat>& per_symbol, const TimeFrame& tx);

/**
 * Effective delay-Doppler channel matrix
 *
 *   H_eff = (F_N (x) I_p) blkdiag(H_1..H_N) (F_N^H (x) I_q)
 *
 * for per-symbol blocks H_n of size p x q (p = q = M in the SISO case;
 * p = N_r*M, q = N_s*M for MIMO blocks). Multiplying a vectorized DD
 * frame by this matrix reproduces the modulate/apply/demodulate
 * pipeline.
 */
CMat effective_dd_matrix(const std::vector<CMat>& per_symbol);

}  // namespace irsotfs
