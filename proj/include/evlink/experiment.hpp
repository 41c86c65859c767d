// Experiment orchestration: configuration, single end-to-end trials,
// multi-trial sweeps and the CSV report artifacts.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evlink/pipeline.hpp"
#include "evlink/sim.hpp"
#include "evlink/tx.hpp"
#include "evlink/vlc.hpp"

namespace evlink::experiment {

struct ExperimentConfig {
    tx::TxConfig tx;
    sim::SimConfig sim;            // camera, bar, trajectory, noise, seed
    pipeline::ReceiverParams rx;   // thresholds and windows only; its tx,
                                   // camera and layout copies are refreshed
                                   // from the fields above before each run
    bool extended_info_book = false; // full two-sided codebook (5 bits)

    std::vector<std::uint64_t> seeds = {1};
    std::vector<double> sweep_speeds_mps = {20.0 / 3.6, 30.0 / 3.6, 40.0 / 3.6};
    std::vector<std::string> sweep_modes = {"aggregate", "single_pair"};

    std::string out_dir = ".";
    int workers = 1;       // sweep thread count
    int n_frames = 0;      // 0 = as many frames as the trajectory allows
    bool write_events = false;
    std::string events_format = "bin"; // "bin" or "csv"
};

// Every recognized "section.key" configuration name, in declaration order.
std::vector<std::string> config_keys();

// Applies one key=value setting. Throws std::invalid_argument on unknown
// keys or unparseable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value);

// Parses a flat key=value stream ('#' comments, blank lines ignored) on
// top of the given defaults.
void parse_config(std::istream& in, ExperimentConfig& cfg);

// Reconciles derived pieces (cluster count and codebooks from the bar
// layout, info alphabet choice). Call after the last apply_setting.
void finalize(ExperimentConfig& cfg);

// Receiver parameter block with tx/camera/layout mirrored in.
pipeline::ReceiverParams receiver_params(const ExperimentConfig& cfg);

// The largest baseline the receiver may range with under this config;
// reference spacing for the theoretical error curves.
double reference_baseline_m(const ExperimentConfig& cfg);

// Frames one trial transmits: run.n_frames, or as many as the trajectory
// allows after the preamble. Throws when that is not at least one.
int session_frames(const ExperimentConfig& cfg);

// The deterministic session a trial with this seed transmits.
tx::Session make_session(const ExperimentConfig& cfg, std::uint64_t seed);

struct RangeRow {
    std::int64_t t_us = 0;
    double estimate_m = 0.0; // NaN when the frame was unrangeable
    double truth_m = 0.0;
    int n_pairs = 0;
    std::string flag;        // ok | degraded | none | lost
};

struct RmseRow {
    double bin_mid_m = 0.0;
    double speed_mps = 0.0;
    double rmse_m = 0.0;
    double theory_1px_m = 0.0;
    double theory_0p5px_m = 0.0;
    // Not serialized; carried for pooled statistics.
    std::uint64_t n_frames = 0;
    std::uint64_t n_err_ge_0p5 = 0;
    double max_abs_err_m = 0.0;
};

struct TrialResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;       // sync failure or tracking loss note

    vlc::BerReport ber;
    std::vector<RangeRow> range_rows;
    std::vector<RmseRow> rmse_rows;
    double realized_update_rate_hz = 0.0;
    int frames_total = 0;
    int frames_ranged = 0;
    sim::SimStats sim_stats;
};

// Distance-binned RMSE rows from (estimate, truth) pairs; the theory
// columns evaluate the error curves at each bin midpoint with the
// configuration's reference baseline.
std::vector<RmseRow> rmse_rows_from_pairs(
    const ExperimentConfig& cfg,
    const std::vector<std::pair<double, double>>& est_truth, double speed_mps);

// One fully seeded end-to-end pass: payload, channel, receiver, reports.
// Deterministic for a given (config, seed). Does not touch the filesystem.
TrialResult run_trial(const ExperimentConfig& cfg, std::uint64_t seed);

// Report writers (headers pinned; fixed-precision fields, so identical
// inputs serialize byte-identically).
void write_range_csv(std::ostream& os, const std::vector<RangeRow>& rows);
void write_rmse_csv(std::ostream& os, const std::vector<RmseRow>& rows);
void write_ber_csv(std::ostream& os, const vlc::BerReport& report);

struct SweepCell {
    double speed_mps = 0.0;
    std::string mode; // aggregate | single_pair
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepCell> cells;     // full requested grid, fixed order
    std::vector<TrialResult> trials;  // aligned with cells
};

// Runs the speed x mode x seed grid (in parallel when cfg.workers > 1;
// the result order never depends on scheduling).
SweepResult sweep(const ExperimentConfig& cfg);

// Merged sweep table: one row per (speed, mode, bin) over all seeds, "NA"
// where no trial produced data. Header
// "speed_mps,mode,bin_mid_m,trials,rmse_mean_m,ber,frac_ge_0p5m".
void write_sweep_summary(std::ostream& os, const ExperimentConfig& cfg,
                         const SweepResult& result);

// File name stem for one sweep cell, e.g. "v8.3333_aggregate_seed3".
std::string cell_stem(const SweepCell& cell);

}  // namespace evlink::experiment
