#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "irsotfs/channel.hpp"
#include "irsotfs/detect.hpp"

namespace irsotfs {

enum class Scenario { SumRate, Ber, Convergence, IrsSweep, DistanceSweep, Mse };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

/**
 * 3-D drop geometry and the average-gain law. Each link's taps are
 * scaled by sqrt(gain) with gain = 10^(gain_db/10) * (d/d0)^(-exp);
 * the reference offsets default to 0 dB and act as aperture knobs for
 * the reflected links.
 */
struct Geometry {
    Eigen::Vector3d bs{0.0, -30.0, 2.0};
    Eigen::Vector3d irs{30.0, 10.0, 4.0};
    Eigen::Vector3d ue{30.0, 0.0, 1.0};
    double pathloss_exp = 2.2;
    double ref_distance_m = 1.0;
    double direct_gain_db = 0.0;
    double bs_irs_gain_db = 0.0;
    double irs_ue_gain_db = 0.0;
    bool use_distance_law = false;  // plain unit-gain links when false

    double link_gain(double distance_m, double gain_db) const;
    double direct_amplitude() const;
    double bs_irs_amplitude() const;
    double irs_ue_amplitude() const;
};

struct BeamformConfig {
    int max_iter = 100;
    double tol = 1e-3;
    bool random_init = false;
    bool enabled = true;
};

struct AlsConfig {
    int blocks = 8;        // L
    int slots = 16;        // T
    int max_sweeps = 50;
    double tol = 1e-8;
    bool slot_drift = false;  // evolve Doppler phase across pilot slots
};

/// One curve of the MSE scenario.
struct MseVariant {
    std::string label;
    FadingModel model = FadingModel::Bpm;
    int n_t = 1, n_r = 1;
    bool fractional_doppler = false;
    bool ofdm_reference = false;  // N = 1 Doppler bin
};

struct ExperimentConfig {
    Scenario scenario = Scenario::SumRate;
    GridDims dims{8, 8, 0};
    int n_t = 1, n_r = 1;
    int k_irs = 16;
    ChannelProfile profile;
    std::vector<int> cases = {1};
    std::vector<double> snr_db = {0.0};
    int trials = 100;
    std::uint64_t seed = 1;
    Geometry geometry;
    AdmmConfig detector;
    AlsConfig als;
    BeamformConfig beamform;
    int modulation_q = 1;
    long long frame_budget = 10000;
    long long err_target = 200;
    bool ber_beamformed = false;
    std::vector<int> k_list = {4, 8, 16};
    std::vector<double> distances_m;
    int convergence_max_iter = 100;
    std::vector<MseVariant> mse_variants;
    std::string output = "results/out";

    void validate() const;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_json_text() const;
    /// FNV-1a hash of the canonical JSON dump.
    std::uint64_t hash() const;
    /// Applies a dotted-path override, value parsed as JSON when
    /// possible, else taken as a string.
    void apply_override(const std::string& key, const std::string& value);
};

}  // namespace irsotfs
