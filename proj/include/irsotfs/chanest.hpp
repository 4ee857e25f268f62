#pragma once

#include <vector>

#include "irsotfs/irs.hpp"
#include "irsotfs/rng.hpp"

namespace irsotfs {

/**
 * Pilot schedule for cascaded-channel estimation: L blocks of T time
 * slots. The IRS phase row theta[l] is constant within a block and the
 * T pilot vectors repeat across blocks.
 *
 * The default design draws the phase rows from an L-point DFT matrix
 * (unit modulus) and the pilot rows from a T-point DFT matrix, which
 * keeps both least-squares subproblems maximally well conditioned.
 */
struct PilotSchedule {
    int blocks = 1;  // L
    int slots = 1;   // T
    CMat phases;     // L x K, unit-modulus rows
    CMat pilots;     // T x (N_t * N * M), full column rank

    static PilotSchedule dft_design(int l, int t, int k, int tx_dim);
    /// Identifiability guard: rejects schedules whose stacked LS
    /// systems are underdetermined.
    void validate(int k, int rx_dim, int tx_dim, int nm) const;
};

/**
 * Frame-level factors of the cascaded channel: the received pilot model
 * is r(t) = D (diag(theta) (x) I_nm) G x(t) + z with
 *   D : rx_dim x (K * nm),   G : (K * nm) x tx_dim.
 */
struct CascadeFactors {
    int k = 1;
    int nm = 1;  // per-element block width (N*M)
    CMat d;      // rx_dim x (k * nm)
    CMat g;      // (k * nm) x tx_dim

    void validate() const;
    CMat d_block(int element) const { return d.middleCols(element * nm, nm); }
    CMat g_block(int element) const { return g.middleRows(element * nm, nm); }
    /// D (diag(theta) (x) I_nm) G for one phase row.
    CMat cascade(const Eigen::RowVectorXcd& theta) const;

    static CascadeFactors random(int k, int nm, int rx_dim, int tx_dim, Rng& rng);
    /// Assembles frame-level factors from per-symbol link matrices,
    /// with symbol indices offset by symbol_offset (used to model slot
    /// drift under Doppler).
    static CascadeFactors from_links(const MimoLinkSet& links, int symbol_offset = 0);
};

/// Noisy received slices R[l] = sum_k theta_k[l] D_k G_k X^T + Z[l].
std::vector<CMat> simulate_rx_tensor(const CascadeFactors& factors,
                                     const PilotSchedule& schedule, double sigma2,
                                     Rng& rng);

/// Column-matching Kronecker product: column r is A[:,r] (x) B[:,r].
CMat khatri_rao(const CMat& a, const CMat& b);

struct AlsResult {
    CascadeFactors est;
    std::vector<double> residuals;  // model misfit after each sweep
    int sweeps = 0;
};

/**
 * Alternating least squares over the two factors. Each half-sweep is an
 * exact LS solve (normal equations with a rank guard), so the residual
 * never increases. Stops on relative residual change below tol.
 */
AlsResult als_estimate(const std::vector<CMat>& slices, const PilotSchedule& schedule,
                       const CascadeFactors& init, int max_sweeps, double tol);

struct MseReport {
    double cascaded = 0;  // scaling-ambiguity-free, averaged over phase rows
    double factor_d = 0;  // after per-block diagonal-scale alignment
    double factor_g = 0;
};

MseReport cascade_mse(const CascadeFactors& truth, const CascadeFactors& est,
                      const CMat& phases);

}  // namespace irsotfs
