#pragma once

#include <vector>

#include "irsotfs/dd.hpp"
#include "irsotfs/rng.hpp"

namespace irsotfs {

/// One propagation path in the delay-Doppler domain.
struct PathTap {
    cd gain;                    // h * exp(j*theta)
    int delay_tap = 0;          // integer delay, in samples
    int doppler_tap = 0;        // integer Doppler bin
    double frac_doppler = 0.0;  // fractional Doppler offset in [-0.5, 0.5)
};

struct TapList {
    std::vector<PathTap> paths;
    GridDims dims;

    void validate() const;
    int max_delay_tap() const;
    /// Scales every gain by the same factor (used for link-gain knobs).
    TapList scaled(double amplitude) const;
};

enum class FadingModel { Bpm, Eva };

/**
 * Statistical description of one link.
 *
 * Bpm: num_paths paths, delay and Doppler taps i.i.d. uniform on
 * {0..max_tap}, Rayleigh gains with unit total average power.
 *
 * Eva: fixed excess-delay/PDP tables, Doppler drawn uniform on
 * [0, nu_max] with nu_max set by the carrier frequency and UE speed.
 */
struct ChannelProfile {
    FadingModel model = FadingModel::Bpm;
    int num_paths = 4;
    int max_tap = 3;  // BPM tap range {0..max_tap}
    std::vector<double> delay_ns = {0, 30, 150, 310, 370, 710, 1090, 1730, 2510};
    std::vector<double> pdp_db = {0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12, -16.9};
    double delta_f_hz = 15e3;
    double carrier_hz = 4e9;
    double ue_speed_kmh = 120.0;
    bool fractional_doppler = false;

    void validate() const;
    /// Linearized PDP weights, normalized to sum to 1.
    std::vector<double> pdp_linear() const;
};

/// Forward cyclic delay shift by l: (P x)[m] = x[(m - l) mod M].
Eigen::MatrixXd delay_matrix(int l, int M);

/// Diagonal Doppler phase-ramp matrix for OFDM symbol n:
///   D[m,m] = exp(j*2*pi*(k+kappa)/(N*M) * (n*(M+M_cp) + M_cp + m - l)).
/// The ramp runs over the absolute sample index so the per-sample
/// convolution oracle matches exactly; it reduces to the identity at
/// zero Doppler.
CMat doppler_matrix(int n, int k, double kappa, int l, GridDims dims);

/// Time-domain channel matrix of OFDM symbol n:
///   H_n = sum_q gain_q * Doppler(n, k_q + kappa_q, l_q) * Delay(l_q).
CMat channel_matrix(const TapList& taps, int n);

TapList sample_bpm(Rng& rng, const ChannelProfile& profile, GridDims dims);

TapList sample_eva(Rng& rng, const ChannelProfile& profile, GridDims dims,
                   double ue_speed_kmh);

/// Dispatches on profile.model.
TapList sample_taps(Rng& rng, const ChannelProfile& profile, GridDims dims);

}  // namespace irsotfs
