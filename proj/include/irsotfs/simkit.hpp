#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsotfs/beamform.hpp"
#include "irsotfs/chanest.hpp"
#include "irsotfs/config.hpp"
#include "irsotfs/detect.hpp"
#include "irsotfs/irs.hpp"

namespace irsotfs {

/// Rectangular numeric table with the metadata needed to reproduce it.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::string scenario;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string code_version;

    void validate() const;
    double at(int row, const std::string& column) const;
    std::string csv_text() const;
};

/// Writes <stem>.csv and <stem>.meta.json, creating directories as needed.
void write_outputs(const ResultTable& table, const ExperimentConfig& cfg,
                   const std::string& stem);

ResultTable run_sum_rate(const ExperimentConfig& cfg);
ResultTable run_ber(const ExperimentConfig& cfg);
ResultTable run_convergence(const ExperimentConfig& cfg);
ResultTable run_irs_sweep(const ExperimentConfig& cfg);
ResultTable run_distance_sweep(const ExperimentConfig& cfg);
ResultTable run_mse(const ExperimentConfig& cfg);

/// Dispatches on cfg.scenario.
ResultTable run_experiment(const ExperimentConfig& cfg);

/// Worker count: IRSOTFS_THREADS env var when set, else hardware
/// concurrency. Results never depend on it.
int worker_count();

/// Runs fn(i) for i in [0, n) on the worker pool; fn must only touch
/// its own pre-allocated slot.
void parallel_for(long long n, const std::function<void(long long)>& fn);

namespace detail {

/// Per-symbol link matrices of one channel drop, assembled once and
/// shared by every case evaluated on that drop.
struct LinkMatrices {
    std::vector<CMat> hd;  // N_r M x N_t M (zero matrices when absent)
    std::vector<CMat> d;   // N_r M x K M
    std::vector<CMat> g;   // K M x N_t M
    bool has_direct = false;
    int k = 0;
};

LinkMatrices assemble_links(const MimoLinkSet& links);

/// Cascaded per-symbol channels for one case; panel == nullptr drops
/// the IRS path, use_direct == false drops the direct link.
std::vector<CMat> case_channels(const LinkMatrices& mats, const IrsPanel* panel,
                                bool use_direct);

/// IRS phase setting per sum-rate case selector (1, 2, 3, 4, 6, 7
/// share STM/random/coherent semantics; case 5 has no panel).
IrsPanel sum_rate_panel(int case_id, const MimoLinkSet& links, Rng& phase_rng);

/// Estimated per-symbol cascade via ALS on a DFT pilot schedule;
/// rel_noise is the experiment's 10^(-SNR/10), applied relative to the
/// mean received pilot power.
std::vector<CMat> estimate_cascade(Rng& rng, const MimoLinkSet& links,
                                   const IrsPanel& panel, const AlsConfig& als,
                                   double rel_noise);

}  // namespace detail

}  // namespace irsotfs
