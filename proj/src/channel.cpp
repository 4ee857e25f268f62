#include "irsotfs/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace irsotfs {

void TapList::validate() const {
    dims.validate();
    if (paths.empty()) throw std::invalid_argument("TapList: no paths");
    for (const auto& p : paths) {
        if (p.delay_tap < 0 || p.delay_tap >= dims.M)
            throw std::invalid_argument("TapList: delay tap out of range");
        if (std::abs(p.frac_doppler) > 0.5)
            throw std::invalid_argument("TapList: |frac_doppler| must be <= 0.5");
    }
}

int TapList::max_delay_tap() const {
    int m = 0;
    for (const auto& p : paths) m = std::max(m, p.delay_tap);
    return m;
}

TapList TapList::scaled(double amplitude) const {
    TapList out = *this;
    for (auto& p : out.paths) p.gain *= amplitude;
    return out;
}

void ChannelProfile::validate() const {
    if (model == FadingModel::Bpm) {
        if (num_paths < 1) throw std::invalid_argument("ChannelProfile: num_paths >= 1");
        if (max_tap < 0) throw std::invalid_argument("ChannelProfile: max_tap >= 0");
    } else {
        if (delay_ns.size() != pdp_db.size() || delay_ns.empty())
            throw std::invalid_argument("ChannelProfile: delay/PDP tables must match");
    }
    if (delta_f_hz <= 0 || carrier_hz <= 0)
        throw std::invalid_argument("ChannelProfile: carrier parameters must be positive");
}

std::vector<double> ChannelProfile::pdp_linear() const {
    std::vector<double> w(pdp_db.size());
    double sum = 0;
    for (size_t i = 0; i < pdp_db.size(); ++i) {
        w[i] = std::pow(10.0, pdp_db[i] / 10.0);
        sum += w[i];
    }
    for (auto& x : w) x /= sum;
    return w;
}

Eigen::MatrixXd delay_matrix(int l, int M) {
    if (l < 0 || l >= M) throw std::invalid_argument("delay_matrix: l out of range");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(M, M);
    for (int m = 0; m < M; ++m) p(m, (m - l + M) % M) = 1.0;
    return p;
}

CMat doppler_matrix(int n, int k, double kappa, int l, GridDims dims) {
    dims.validate();
    CMat d = CMat::Zero(dims.M, dims.M);
    const double base = kTwoPi * (k + kappa) / (static_cast<double>(dims.N) * dims.M);
    const double offset = static_cast<double>(n) * dims.symbol_len() + dims.M_cp - l;
    for (int m = 0; m < dims.M; ++m) {
        const double a = base * (offset + m);
        d(m, m) = cd(std::cos(a), std::sin(a));
    }
    return d;
}

CMat channel_matrix(const TapList& taps, int n) {
    taps.validate();
    const int M = taps.dims.M;
    CMat h = CMat::Zero(M, M);
    for (const auto& p : taps.paths) {
        const CMat d = doppler_matrix(n, p.doppler_tap, p.frac_doppler, p.delay_tap,
                                      taps.dims);
        // Delta * Pi applied without forming the permutation: column
        // (m - l) mod M of the product holds gain * d(m, m) at row m.
        for (int m = 0; m < M; ++m)
            h(m, (m - p.delay_tap + M) % M) += p.gain * d(m, m);
    }
    return h;
}

TapList sample_bpm(Rng& rng, const ChannelProfile& profile, GridDims dims) {
    profile.validate();
    dims.validate();
    if (profile.model != FadingModel::Bpm)
        throw std::invalid_argument("sample_bpm: profile.model must be Bpm");
    if (profile.max_tap >= dims.M)
        throw std::invalid_argument("sample_bpm: grid too small for tap range");
    TapList taps;
    taps.dims = dims;
    const double var = 1.0 / profile.num_paths;
    for (int q = 0; q < profile.num_paths; ++q) {
        PathTap p;
        p.gain = rng.cnormal(var);
        p.delay_tap = rng.uniform_int(0, profile.max_tap);
        p.doppler_tap = rng.uniform_int(0, profile.max_tap);
        p.frac_doppler = 0.0;  // BPM taps are integer (Table-style draw)
        if (profile.fractional_doppler) p.frac_doppler = rng.uniform(-0.5, 0.5);
        taps.paths.push_back(p);
    }
    return taps;
}

TapList sample_eva(Rng& rng, const ChannelProfile& profile, GridDims dims,
                   double ue_speed_kmh) {
    profile.validate();
    dims.validate();
    TapList taps;
    taps.dims = dims;
    const auto weights = profile.pdp_linear();
    const double nu_max =
        profile.carrier_hz * (ue_speed_kmh / 3.6) / 299792458.0;  // f_c * v / c
    // Doppler in bins: nu * N * T with T = 1/delta_f.
    const double bins_per_hz = static_cast<double>(dims.N) / profile.delta_f_hz;
    for (size_t q = 0; q < profile.delay_ns.size(); ++q) {
        PathTap p;
        p.gain = rng.cnormal(weights[q]);
        const double tap =
            profile.delay_ns[q] * 1e-9 * static_cast<double>(dims.M) * profile.delta_f_hz;
        p.delay_tap = static_cast<int>(std::lround(tap));
        if (p.delay_tap >= dims.M)
            throw std::invalid_argument("sample_eva: delay tap exceeds grid (M too small)");
        const double nu_bins = rng.uniform(0.0, nu_max) * bins_per_hz;
        p.doppler_tap = static_cast<int>(std::lround(nu_bins));
        p.frac_doppler = profile.fractional_doppler ? nu_bins - p.doppler_tap : 0.0;
        taps.paths.push_back(p);
    }
    return taps;
}

TapList sample_taps(Rng& rng, const ChannelProfile& profile, GridDims dims) {
    if (profile.model == FadingModel::Bpm) return sample_bpm(rng, profile, dims);
    return sample_eva(rng, profile, dims, profile.ue_speed_kmh);
}

}  // namespace irsotfs
