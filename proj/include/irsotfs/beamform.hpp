#pragma once

#include <vector>

#include "irsotfs/dd.hpp"
#include "irsotfs/rng.hpp"

namespace irsotfs {

/**
 * Frame-level beamformer.
 *
 * One N_t x N_s block V_j per subcarrier j and OFDM symbol n. In the
 * antenna-major layout used for the channel matrices, the per-symbol
 * matrix W_n has entry W_n[t*M + j, s*M + j] = V_{n,j}(t, s) and zeros
 * elsewhere (per-subcarrier blocks; no mixing across subcarriers).
 */
struct Beamformer {
    int n_t = 1, n_s = 1, M = 1, N = 1;
    std::vector<CMat> v;  // N*M blocks, v[n*M + j] is V_j of symbol n

    static Beamformer zero(int n_t, int n_s, int M, int N);
    /// Deterministic scaled identity-like blocks with total power p_max.
    static Beamformer uniform(int n_t, int n_s, int M, int N, double p_max);
    /// Seeded Gaussian blocks scaled onto the power sphere.
    static Beamformer random(int n_t, int n_s, int M, int N, double p_max, Rng& rng);

    const CMat& block(int n, int j) const { return v[n * M + j]; }
    CMat& block(int n, int j) { return v[n * M + j]; }
    CMat assemble(int n) const;  // (N_t M) x (N_s M)
    double power() const;        // sum_n ||W_n||_F^2

    /// Flattened free entries in (n, j, s, t) order; t runs fastest.
    CVec pack() const;
    void unpack(const CVec& w);
};

/// Sum rate in bit/s/Hz:
///   R = 1/(M + M_cp) * sum_n log2 det(I + H_n W_n W_n^H H_n^H / sigma2).
double sum_rate(const Beamformer& w, const std::vector<CMat>& channels, double sigma2,
                GridDims dims);

/// Lagrangian-dual auxiliaries: Lambda_n = A_n^H A_n / sigma2 with
/// A_n = H_n W_n. At this value the dual surrogate is tight.
std::vector<CMat> update_lambda(const Beamformer& w, const std::vector<CMat>& channels,
                                double sigma2);

/// Quadratic-transform auxiliaries: Y_n = (A_n A_n^H + sigma2 I)^{-1} A_n,
/// the stationary point of the quadratic surrogate in Y.
std::vector<CMat> update_alpha(const Beamformer& w, const std::vector<CMat>& channels,
                               double sigma2);

/// Full surrogate value in nats at (W, Lambda, Y); equals the true
/// rate (nats) when Lambda and Y are freshly updated.
double surrogate_value(const Beamformer& w, const std::vector<CMat>& channels,
                       const std::vector<CMat>& lambda, const std::vector<CMat>& y,
                       double sigma2);

/**
 * Quadratic coefficients of the surrogate over the free beamformer
 * entries: minimize w^H mu w - 2 Re(p^H w) subject to ||w||^2 <= P_max.
 * mu is Hermitian PSD and block-diagonal with one N_t x N_t block per
 * (symbol, subcarrier, stream) triple, stored block-wise.
 */
struct Qcqp {
    std::vector<CMat> blocks;  // each N_t x N_t Hermitian PSD
    CVec p;                    // same entry order as Beamformer::pack()

    CMat dense() const;  // assembled block-diagonal matrix (tests)
};

Qcqp build_qcqp(const std::vector<CMat>& channels, const std::vector<CMat>& lambda,
                const std::vector<CMat>& y, double sigma2, int M);

/// Global solution of the norm-ball QCQP via eigendecomposition and
/// bisection on the ball multiplier (relative tolerance 1e-10).
CVec solve_qcqp(const CMat& mu, const CVec& p, double p_max);
CVec solve_qcqp_blocks(const std::vector<CMat>& blocks, const CVec& p, double p_max);

struct AoOptions {
    int max_iter = 100;
    double tol = 1e-3;     // relative rate change
    bool random_init = false;
    std::uint64_t init_seed = 0;
};

struct AoResult {
    Beamformer w;
    std::vector<double> rate_trace;  // bit/s/Hz, non-decreasing
    int iterations = 0;
};

/// Alternating optimization of the beamformer (dual update, quadratic
/// update, QCQP step) until the rate stalls or max_iter is reached.
AoResult ao_beamform(const std::vector<CMat>& channels, double sigma2, double p_max,
                     GridDims dims, int n_s, const AoOptions& opts = {});

}  // namespace irsotfs
