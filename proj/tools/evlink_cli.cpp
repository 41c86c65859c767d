// Command-line front end: synthesize event streams, run the receiver over
// recorded streams, and drive seeded end-to-end experiments and sweeps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "evlink/events.hpp"
#include "evlink/experiment.hpp"
#include "evlink/frontend.hpp"
#include "evlink/pipeline.hpp"
#include "evlink/presence.hpp"
#include "evlink/sim.hpp"
#include "evlink/tx.hpp"

namespace fs = std::filesystem;
using namespace evlink;

namespace {

// Shared --config / per-key override plumbing. Every configuration key is
// exposed as a long flag of the same name; overrides apply on top of the
// file in command-line order.
struct ConfigCli {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_config_options(CLI::App* cmd, ConfigCli& cc) {
    cmd->add_option("-c,--config", cc.config_path,
                    "key=value configuration file");
    for (const std::string& key : experiment::config_keys()) {
        cmd->add_option_function<std::string>(
               "--" + key,
               [&cc, key](const std::string& v) {
                   cc.overrides.emplace_back(key, v);
               },
               "set " + key)
            ->type_name("VAL")
            ->group("Configuration overrides");
    }
}

experiment::ExperimentConfig build_config(const ConfigCli& cc) {
    experiment::ExperimentConfig cfg;
    if (!cc.config_path.empty()) {
        std::ifstream in(cc.config_path);
        if (!in)
            throw std::runtime_error("cannot open config file: " + cc.config_path);
        experiment::parse_config(in, cfg);
    }
    for (const auto& [key, value] : cc.overrides)
        experiment::apply_setting(cfg, key, value);
    experiment::finalize(cfg);
    return cfg;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

std::string chip_string(const codes::Chips& chips) {
    std::string s;
    s.reserve(chips.size());
    for (std::int8_t c : chips) s += (c > 0 ? '+' : '-');
    return s;
}

void print_accounting(const tx::TxConfig& tc) {
    const tx::RateReport r = tx::nominal_data_rate(tc, tc.bits_per_symbol());
    std::printf("chip period       : %.1f us\n", tc.chip_period_us());
    std::printf("frame length      : %d chips (%d pilot + %d info)\n",
                tc.frame_chips(), tc.pilot_len, tc.info_len);
    std::printf("frame period      : %.3f ms\n", r.frame_period_s * 1e3);
    std::printf("nominal update    : %.6g Hz\n", r.update_rate_hz);
    std::printf("bits per symbol   : %d\n", tc.bits_per_symbol());
    std::printf("nominal total     : %.6g bps over %d clusters\n", r.total_bps,
                tc.n_clusters);
    std::printf("nominal per LED   : %.6g bps over %d LEDs\n", r.per_led_bps,
                tc.n_leds());
}

// Nearest ground-truth sample for a frame timestamp (samples sorted by t).
double truth_at(const std::vector<sim::GroundTruthSample>& truth,
                std::int64_t t_us) {
    if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
    auto it = std::lower_bound(
        truth.begin(), truth.end(), t_us,
        [](const sim::GroundTruthSample& s, std::int64_t t) { return s.t_us < t; });
    if (it == truth.end()) return truth.back().distance_m;
    if (it == truth.begin()) return it->distance_m;
    auto prev = std::prev(it);
    return (t_us - prev->t_us) <= (it->t_us - t_us) ? prev->distance_m
                                                    : it->distance_m;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    std::string events_path;  // default <out_dir>/events.<format>
    std::string truth_path;   // default <out_dir>/truth.csv
    std::string chips_path;   // optional chip trace
};

int cmd_simulate(const ConfigCli& cc, const SimulateOpts& opt) {
    experiment::ExperimentConfig cfg = build_config(cc);
    fs::create_directories(cfg.out_dir);

    const tx::Session session = experiment::make_session(cfg, cfg.sim.seed);
    const sim::SimResult res = sim::simulate_events(cfg.sim, session);

    fs::path events_path = opt.events_path.empty()
                               ? fs::path(cfg.out_dir) /
                                     ("events." + cfg.events_format)
                               : fs::path(opt.events_path);
    save_events(events_path.string(), res.events);

    fs::path truth_path = opt.truth_path.empty()
                              ? fs::path(cfg.out_dir) / "truth.csv"
                              : fs::path(opt.truth_path);
    {
        std::ofstream os = open_out(truth_path);
        sim::write_truth_csv(os, res.truth);
    }
    if (!opt.chips_path.empty()) {
        std::ofstream os = open_out(opt.chips_path);
        tx::write_chip_trace(os, session);
    }

    std::printf("frames            : %d (%.3f s)\n", session.n_frames,
                double(session.n_frames) * cfg.tx.frame_period_s());
    std::printf("events            : %zu -> %s\n", res.events.size(),
                events_path.string().c_str());
    std::printf("  signal          : %llu\n",
                static_cast<unsigned long long>(res.stats.n_signal));
    std::printf("  spurious        : %llu\n",
                static_cast<unsigned long long>(res.stats.n_spurious));
    std::printf("  missed          : %llu\n",
                static_cast<unsigned long long>(res.stats.n_missed));
    std::printf("  refractory drop : %llu\n",
                static_cast<unsigned long long>(res.stats.n_suppressed));
    std::printf("truth samples     : %zu -> %s\n", res.truth.size(),
                truth_path.string().c_str());
    if (res.stats.truncated)
        std::fprintf(stderr,
                     "warning: event stream truncated at the configured cap "
                     "(%llu events)\n",
                     static_cast<unsigned long long>(cfg.sim.max_events));
    return 0;
}

// ----------------------------------------------------------------- receive

struct ReceiveOpts {
    std::string events_path;  // required
    std::string truth_path;   // optional; enables rmse.csv
    std::string pgm_path;     // optional presence-map dump
    int pgm_frame = 0;
    int pgm_cluster = -1;  // -1 = per-cell max over clusters
};

int cmd_receive(const ConfigCli& cc, const ReceiveOpts& opt) {
    experiment::ExperimentConfig cfg = build_config(cc);
    fs::create_directories(cfg.out_dir);

    std::vector<Event> stream = load_events(opt.events_path);
    if (!std::is_sorted(stream.begin(), stream.end(), event_less))
        std::sort(stream.begin(), stream.end(), event_less);

    std::vector<sim::GroundTruthSample> truth;
    if (!opt.truth_path.empty()) {
        std::ifstream in(opt.truth_path);
        if (!in)
            throw std::runtime_error("cannot open truth file: " + opt.truth_path);
        truth = sim::read_truth_csv(in);
    }

    const pipeline::ReceiverParams rxp = experiment::receiver_params(cfg);
    pipeline::ReceiveResult rx;
    try {
        rx = pipeline::receive(stream, rxp);
    } catch (const frontend::SyncFailed& e) {
        std::ofstream os = open_out(fs::path(cfg.out_dir) / "range.csv");
        experiment::write_range_csv(os, {});
        std::fprintf(stderr, "sync failed: %s\n", e.what());
        return 2;
    }

    std::vector<experiment::RangeRow> rows;
    std::vector<std::pair<double, double>> est_truth;
    for (const pipeline::FrameRecord& fr : rx.frames) {
        experiment::RangeRow row;
        row.t_us = fr.t_us;
        row.estimate_m = fr.ranged()
                             ? fr.distance_m
                             : std::numeric_limits<double>::quiet_NaN();
        row.truth_m = truth_at(truth, fr.t_us);
        row.n_pairs = fr.n_pairs;
        row.flag = fr.tracking_lost ? "lost"
                   : !fr.ranged()   ? "none"
                   : fr.degraded    ? "degraded"
                                    : "ok";
        if (fr.ranged() && !truth.empty())
            est_truth.emplace_back(fr.distance_m, row.truth_m);
        rows.push_back(std::move(row));
    }
    {
        std::ofstream os = open_out(fs::path(cfg.out_dir) / "range.csv");
        experiment::write_range_csv(os, rows);
    }
    {
        std::ofstream os = open_out(fs::path(cfg.out_dir) / "symbols.csv");
        os << "frame,t_us,cluster,symbol\n";
        char buf[96];
        for (const pipeline::FrameRecord& fr : rx.frames)
            for (std::size_t k = 0; k < fr.symbols.size(); ++k) {
                if (fr.symbols[k] < 0) continue;
                int n = std::snprintf(buf, sizeof buf, "%d,%lld,%zu,%d\n",
                                      fr.frame_index,
                                      static_cast<long long>(fr.t_us), k,
                                      fr.symbols[k]);
                os.write(buf, n);
            }
    }
    if (!truth.empty()) {
        std::ofstream os = open_out(fs::path(cfg.out_dir) / "rmse.csv");
        experiment::write_rmse_csv(
            os, experiment::rmse_rows_from_pairs(cfg, est_truth,
                                                 cfg.sim.trajectory.speed_mps));
    }

    if (!opt.pgm_path.empty()) {
        if (opt.pgm_frame < 0 ||
            opt.pgm_frame >= static_cast<int>(rx.frames.size()))
            throw std::runtime_error("--pgm-frame out of range");
        const pipeline::FrameRecord& fr = rx.frames[opt.pgm_frame];
        const double T = rxp.tx.chip_period_us();
        const double frame_us = rxp.tx.frame_chips() * T;
        const double a_lo =
            (rx.sync.t0_us - 0.5 * T) + double(opt.pgm_frame) * frame_us;
        const presence::PixelSlotSamples samples = presence::sample_pixels(
            stream, fr.roi, a_lo, T, rxp.tx.frame_chips());
        const presence::PresenceMap map =
            presence::presence_map(samples, rxp.grid, rxp.tx.pilots,
                                   rxp.tx.pilot_len, fr.frame_index, fr.t_us);
        std::ofstream os = open_out(opt.pgm_path);
        presence::write_presence_pgm(os, map, opt.pgm_cluster);
    }

    std::printf("events            : %zu in, %zu past the locate filter\n",
                rx.n_events, rx.n_events_filtered);
    std::printf("sync              : t0 %.1f us, psr %.2f\n", rx.sync.t0_us,
                rx.sync.psr);
    std::printf("frames            : %zu decoded, %d ranged\n",
                rx.frames.size(), rx.frames_ranged());
    std::printf("realized update   : %.4g Hz\n", rx.realized_update_rate_hz);
    if (rx.tracking_lost) {
        std::fprintf(stderr, "tracking lost before the end of the stream\n");
        return 3;
    }
    return 0;
}

// --------------------------------------------------------------------- run

int cmd_run(const ConfigCli& cc) {
    experiment::ExperimentConfig cfg = build_config(cc);
    fs::create_directories(cfg.out_dir);

    print_accounting(cfg.tx);

    bool any_sync_failed = false, any_failed = false;
    for (std::uint64_t seed : cfg.seeds) {
        const std::string suffix =
            cfg.seeds.size() > 1 ? "_seed" + std::to_string(seed) : "";

        if (cfg.write_events) {
            // Extra simulation pass; the trial re-runs the same seeded
            // channel, so the dump matches what the receiver consumed.
            experiment::ExperimentConfig scfg = cfg;
            scfg.sim.seed = seed;
            const tx::Session session = experiment::make_session(scfg, seed);
            const sim::SimResult res = sim::simulate_events(scfg.sim, session);
            save_events(
                (fs::path(cfg.out_dir) /
                 ("events" + suffix + "." + cfg.events_format))
                    .string(),
                res.events);
            std::ofstream os =
                open_out(fs::path(cfg.out_dir) / ("truth" + suffix + ".csv"));
            sim::write_truth_csv(os, res.truth);
        }

        const experiment::TrialResult tr = experiment::run_trial(cfg, seed);
        {
            std::ofstream os =
                open_out(fs::path(cfg.out_dir) / ("range" + suffix + ".csv"));
            experiment::write_range_csv(os, tr.range_rows);
        }
        {
            std::ofstream os =
                open_out(fs::path(cfg.out_dir) / ("rmse" + suffix + ".csv"));
            experiment::write_rmse_csv(os, tr.rmse_rows);
        }
        {
            std::ofstream os =
                open_out(fs::path(cfg.out_dir) / ("ber" + suffix + ".csv"));
            experiment::write_ber_csv(os, tr.ber);
        }

        std::printf(
            "seed %llu: %s, frames %d, ranged %d, update %.4g Hz, "
            "ber %.3g (%llu/%llu)\n",
            static_cast<unsigned long long>(seed),
            tr.ok ? "ok" : tr.error.c_str(), tr.frames_total, tr.frames_ranged,
            tr.realized_update_rate_hz, tr.ber.ber(),
            static_cast<unsigned long long>(tr.ber.errors),
            static_cast<unsigned long long>(tr.ber.bits));
        if (!tr.ok) {
            any_failed = true;
            if (tr.frames_total == 0) any_sync_failed = true;
        }
    }
    if (any_sync_failed) return 2;
    return any_failed ? 3 : 0;
}

// ------------------------------------------------------------------- sweep

int cmd_sweep(const ConfigCli& cc) {
    experiment::ExperimentConfig cfg = build_config(cc);
    fs::create_directories(cfg.out_dir);

    const experiment::SweepResult res = experiment::sweep(cfg);

    bool any_failed = false;
    for (std::size_t i = 0; i < res.cells.size(); ++i) {
        const std::string stem = experiment::cell_stem(res.cells[i]);
        const experiment::TrialResult& tr = res.trials[i];
        {
            std::ofstream os =
                open_out(fs::path(cfg.out_dir) / (stem + "_range.csv"));
            experiment::write_range_csv(os, tr.range_rows);
        }
        {
            std::ofstream os =
                open_out(fs::path(cfg.out_dir) / (stem + "_rmse.csv"));
            experiment::write_rmse_csv(os, tr.rmse_rows);
        }
        {
            std::ofstream os =
                open_out(fs::path(cfg.out_dir) / (stem + "_ber.csv"));
            experiment::write_ber_csv(os, tr.ber);
        }
        if (!tr.ok) {
            any_failed = true;
            std::fprintf(stderr, "cell %s: %s\n", stem.c_str(),
                         tr.error.c_str());
        }
    }
    {
        std::ofstream os = open_out(fs::path(cfg.out_dir) / "summary.csv");
        experiment::write_sweep_summary(os, cfg, res);
    }
    std::printf("sweep             : %zu cells -> %s\n", res.cells.size(),
                (fs::path(cfg.out_dir) / "summary.csv").string().c_str());
    return any_failed ? 3 : 0;
}

// ---------------------------------------------------------------- codebook

int cmd_codebook(const ConfigCli& cc) {
    experiment::ExperimentConfig cfg = build_config(cc);
    const tx::TxConfig& tc = cfg.tx;

    std::printf("pilot codes (%d chips each)\n", tc.pilot_len);
    for (int k = 0; k < tc.n_clusters; ++k) {
        const codes::Codeword& cw = tc.pilots[k];
        std::printf("  cluster %2d: row %2d%c  %s\n", k, cw.id.row,
                    cw.id.inverted ? '-' : '+',
                    chip_string(cw.chips).c_str());
    }
    std::printf("info codebook (%zu symbols, %d bits each)\n",
                tc.info_book.size(), tc.bits_per_symbol());
    for (std::size_t s = 0; s < tc.info_book.size(); ++s) {
        const codes::Codeword& cw = tc.info_book[s];
        std::printf("  symbol %2zu: row %2d%c  %s\n", s, cw.id.row,
                    cw.id.inverted ? '-' : '+',
                    chip_string(cw.chips).c_str());
    }
    print_accounting(tc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Optical camera communication and ranging over event streams: "
        "transmitter, channel simulator, and receiver"};
    app.require_subcommand(1);

    ConfigCli cc;
    SimulateOpts simulate_opts;
    ReceiveOpts receive_opts;
    int rc = 0;

    CLI::App* sim_cmd = app.add_subcommand(
        "simulate", "Synthesize an event stream and ground truth");
    add_config_options(sim_cmd, cc);
    sim_cmd->add_option("--events", simulate_opts.events_path,
                        "output event stream (.bin or .csv)");
    sim_cmd->add_option("--truth", simulate_opts.truth_path,
                        "output ground-truth CSV");
    sim_cmd->add_option("--chips", simulate_opts.chips_path,
                        "also dump the transmitted chip trace CSV");
    sim_cmd->callback([&] { rc = cmd_simulate(cc, simulate_opts); });

    CLI::App* rec_cmd = app.add_subcommand(
        "receive", "Run the receiver over a recorded event stream");
    add_config_options(rec_cmd, cc);
    rec_cmd
        ->add_option("--events", receive_opts.events_path,
                     "input event stream (.bin or .csv)")
        ->required();
    rec_cmd->add_option("--truth", receive_opts.truth_path,
                        "ground-truth CSV; enables rmse.csv");
    rec_cmd->add_option("--pgm", receive_opts.pgm_path,
                        "dump one frame's presence map as PGM");
    rec_cmd->add_option("--pgm-frame", receive_opts.pgm_frame,
                        "frame index for --pgm (default 0)");
    rec_cmd->add_option("--pgm-cluster", receive_opts.pgm_cluster,
                        "cluster for --pgm; -1 = max over clusters");
    rec_cmd->callback([&] { rc = cmd_receive(cc, receive_opts); });

    CLI::App* run_cmd = app.add_subcommand(
        "run", "End-to-end seeded trials: simulate, receive, report");
    add_config_options(run_cmd, cc);
    run_cmd->callback([&] { rc = cmd_run(cc); });

    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Speed x mode x seed grid with a merged summary table");
    add_config_options(sweep_cmd, cc);
    sweep_cmd->callback([&] { rc = cmd_sweep(cc); });

    CLI::App* code_cmd = app.add_subcommand(
        "codebook", "Print pilot/info code tables and rate accounting");
    add_config_options(code_cmd, cc);
    code_cmd->callback([&] { rc = cmd_codebook(cc); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
