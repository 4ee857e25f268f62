#pragma once

#include <vector>

#include "irsotfs/channel.hpp"

namespace irsotfs {

/// Reflection state of a K-element IRS panel.
struct IrsPanel {
    Eigen::VectorXd amplitudes;  // beta_k in (0, 1]
    Eigen::VectorXd phases;      // theta_k in (-pi, pi]

    int size() const { return static_cast<int>(phases.size()); }
    void validate() const;
    static IrsPanel ideal(int k);  // beta = 1, theta = 0
    static IrsPanel with_phases(const Eigen::VectorXd& phases);
};

/**
 * Per-antenna-pair tap lists of the three links of one IRS-assisted
 * MIMO drop, plus assembly of the per-OFDM-symbol block matrices
 *
 *   H^d_n : (N_r M) x (N_t M)   direct BS->UE
 *   G_n   : (K M)  x (N_t M)    BS->IRS
 *   D_n   : (N_r M) x (K M)     IRS->UE
 *
 * Blocks are laid out antenna-major: block (r, t) of H^d_n is the M x M
 * channel between transmit antenna t and receive antenna r.
 */
struct MimoLinkSet {
    GridDims dims;
    int n_t = 1, n_r = 1, n_irs = 0;
    bool has_direct = true;
    std::vector<std::vector<TapList>> direct;  // [rx][tx]
    std::vector<std::vector<TapList>> bs_irs;  // [element][tx]
    std::vector<std::vector<TapList>> irs_ue;  // [rx][element]

    void validate() const;
    CMat direct_matrix(int n) const;
    CMat bs_irs_matrix(int n) const;
    CMat irs_ue_matrix(int n) const;

    static MimoLinkSet sample(Rng& rng, const ChannelProfile& profile, GridDims dims,
                              int n_t, int n_r, int n_irs, bool with_direct);
};

/// Reflection-coefficient matrix Theta = diag(beta_k e^{j theta_k}) (x) I_M.
CMat rc_matrix(const IrsPanel& panel, int M);

/// Cascaded channel for symbol n: H_n = H^d_n + D_n Theta G_n.
CMat cascade(const MimoLinkSet& links, const IrsPanel& panel, int n);

/// Same cascade from pre-assembled link matrices (hot path for AO loops).
CMat cascade_from(const CMat* direct, const CMat& d_mat, const CMat& g_mat,
                  const IrsPanel& panel);

/**
 * Strongest-tap-maximization phases.
 *
 * For each element k the dominant (BS->IRS, IRS->UE) tap pair is found
 * by exhaustive search over all L_d * L_g products using the taps of
 * the (tx 1, rx 1) antenna pair, and theta_k co-phases that product:
 * against the strongest direct tap when include_direct is set,
 * otherwise to zero phase.
 */
Eigen::VectorXd stm_phases(const MimoLinkSet& links, bool include_direct);

/// Per-element coordinate ascent on total cascaded-channel energy
/// (genie "coherent" phase setting; strictly stronger than STM).
Eigen::VectorXd energy_ascent_phases(const MimoLinkSet& links,
                                     const Eigen::VectorXd& init, int passes = 2);

}  // namespace irsotfs
