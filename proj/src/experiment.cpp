#include "evlink/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "evlink/frontend.hpp"
#include "evlink/vlp.hpp"

namespace evlink::experiment {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& v) {
    throw std::invalid_argument("config: bad value '" + v + "' for " + key);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) bad_value(key, v);
        return d;
    } catch (const std::invalid_argument&) {
        bad_value(key, v);
    } catch (const std::out_of_range&) {
        bad_value(key, v);
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size()) bad_value(key, v);
        return n;
    } catch (const std::invalid_argument&) {
        bad_value(key, v);
    } catch (const std::out_of_range&) {
        bad_value(key, v);
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) bad_value(key, v);
        return n;
    } catch (const std::invalid_argument&) {
        bad_value(key, v);
    } catch (const std::out_of_range&) {
        bad_value(key, v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    bad_value(key, v);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        const std::string part =
            trim(comma == std::string::npos ? v.substr(start)
                                            : v.substr(start, comma - start));
        if (!part.empty()) out.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

struct KeyHandler {
    const char* key;
    std::function<void(ExperimentConfig&, const std::string&)> apply;
};

const std::vector<KeyHandler>& key_table() {
    static const std::vector<KeyHandler> table = {
        {"tx.blink_rate_hz",
         [](ExperimentConfig& c, const std::string& v) {
             c.tx.blink_rate_hz = to_double("tx.blink_rate_hz", v);
         }},
        {"tx.extended_info_book",
         [](ExperimentConfig& c, const std::string& v) {
             c.extended_info_book = to_bool("tx.extended_info_book", v);
         }},
        {"bar.n_leds",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.layout.n_leds = static_cast<int>(to_int("bar.n_leds", v));
         }},
        {"bar.spacing_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.layout.spacing_m = to_double("bar.spacing_m", v);
         }},
        {"bar.leds_per_cluster",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.layout.leds_per_cluster =
                 static_cast<int>(to_int("bar.leds_per_cluster", v));
         }},
        {"bar.base_y_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.layout.base_y_m = to_double("bar.base_y_m", v);
         }},
        {"cam.focal_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.camera.focal_m = to_double("cam.focal_m", v);
         }},
        {"cam.pixel_pitch_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.camera.pixel_pitch_m = to_double("cam.pixel_pitch_m", v);
         }},
        {"cam.width",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.camera.width = static_cast<int>(to_int("cam.width", v));
         }},
        {"cam.height",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.camera.height = static_cast<int>(to_int("cam.height", v));
         }},
        {"cam.cx",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.camera.cx = to_double("cam.cx", v);
         }},
        {"cam.cy",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.camera.cy = to_double("cam.cy", v);
         }},
        {"traj.speed_mps",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.trajectory.speed_mps = to_double("traj.speed_mps", v);
         }},
        {"traj.lateral_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.trajectory.lateral_m = to_double("traj.lateral_m", v);
         }},
        {"traj.start_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.trajectory.start_m = to_double("traj.start_m", v);
         }},
        {"traj.end_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.trajectory.end_m = to_double("traj.end_m", v);
         }},
        {"traj.vibration_amp_px",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.trajectory.vibration_amp_px = to_double("traj.vibration_amp_px", v);
         }},
        {"traj.vibration_freq_hz",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.trajectory.vibration_freq_hz = to_double("traj.vibration_freq_hz", v);
         }},
        {"noise.preset",
         [](ExperimentConfig& c, const std::string& v) {
             if (v == "off")
                 c.sim.noise = sim::EventNoiseParams{};
             else if (v == "imx636")
                 c.sim.noise = sim::EventNoiseParams::imx636_defaults();
             else
                 bad_value("noise.preset", v);
         }},
        {"noise.miss_prob",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.noise.miss_prob = to_double("noise.miss_prob", v);
         }},
        {"noise.spurious_rate",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.noise.spurious_rate = to_double("noise.spurious_rate", v);
         }},
        {"noise.neg_bias",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.noise.neg_bias = to_double("noise.neg_bias", v);
         }},
        {"noise.jitter_us",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.noise.jitter_us = to_double("noise.jitter_us", v);
         }},
        {"noise.refractory_us",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.noise.refractory_us = to_double("noise.refractory_us", v);
         }},
        {"noise.spurious_margin_px",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.noise.spurious_margin_px =
                 static_cast<int>(to_int("noise.spurious_margin_px", v));
         }},
        {"sim.seed",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.seed = to_u64("sim.seed", v);
         }},
        {"sim.footprint_px",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.footprint_px = static_cast<int>(to_int("sim.footprint_px", v));
         }},
        {"sim.contrast_threshold",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.contrast_threshold = to_double("sim.contrast_threshold", v);
         }},
        {"sim.max_events",
         [](ExperimentConfig& c, const std::string& v) {
             c.sim.max_events = to_u64("sim.max_events", v);
         }},
        {"rx.filter_window_s",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.filter_window_s = to_double("rx.filter_window_s", v);
         }},
        {"rx.filter_min_rate_hz",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.filter_min_rate_hz = to_double("rx.filter_min_rate_hz", v);
         }},
        {"rx.locate_prefix_s",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.locate_prefix_s = to_double("rx.locate_prefix_s", v);
         }},
        {"rx.roi_margin_px",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.roi_margin_px = static_cast<int>(to_int("rx.roi_margin_px", v));
         }},
        {"rx.cell_w",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.grid.cell_w = static_cast<int>(to_int("rx.cell_w", v));
         }},
        {"rx.cell_h",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.grid.cell_h = static_cast<int>(to_int("rx.cell_h", v));
         }},
        {"rx.presence_threshold",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.presence_threshold = to_double("rx.presence_threshold", v);
         }},
        {"rx.psr_threshold",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.psr_threshold = to_double("rx.psr_threshold", v);
         }},
        {"rx.poc_window",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.poc_window = static_cast<int>(to_int("rx.poc_window", v));
         }},
        {"rx.min_baseline_m",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.min_baseline_m = to_double("rx.min_baseline_m", v);
         }},
        {"rx.excluded_clusters",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.excluded_clusters.clear();
             for (const std::string& part : split_list(v))
                 c.rx.excluded_clusters.push_back(
                     static_cast<int>(to_int("rx.excluded_clusters", part)));
         }},
        {"rx.single_pair_mode",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.single_pair_mode = to_bool("rx.single_pair_mode", v);
         }},
        {"rx.single_pair",
         [](ExperimentConfig& c, const std::string& v) {
             const std::vector<std::string> parts = split_list(v);
             if (parts.size() != 2) bad_value("rx.single_pair", v);
             c.rx.single_pair = {static_cast<int>(to_int("rx.single_pair", parts[0])),
                                 static_cast<int>(to_int("rx.single_pair", parts[1]))};
         }},
        {"rx.track_max_shift_cells",
         [](ExperimentConfig& c, const std::string& v) {
             c.rx.track_max_shift_cells =
                 static_cast<int>(to_int("rx.track_max_shift_cells", v));
         }},
        {"run.seeds",
         [](ExperimentConfig& c, const std::string& v) {
             c.seeds.clear();
             for (const std::string& part : split_list(v))
                 c.seeds.push_back(to_u64("run.seeds", part));
         }},
        {"run.out_dir",
         [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
        {"run.workers",
         [](ExperimentConfig& c, const std::string& v) {
             c.workers = static_cast<int>(to_int("run.workers", v));
         }},
        {"run.n_frames",
         [](ExperimentConfig& c, const std::string& v) {
             c.n_frames = static_cast<int>(to_int("run.n_frames", v));
         }},
        {"run.write_events",
         [](ExperimentConfig& c, const std::string& v) {
             c.write_events = to_bool("run.write_events", v);
         }},
        {"run.events_format",
         [](ExperimentConfig& c, const std::string& v) {
             if (v != "bin" && v != "csv") bad_value("run.events_format", v);
             c.events_format = v;
         }},
        {"sweep.speeds_mps",
         [](ExperimentConfig& c, const std::string& v) {
             c.sweep_speeds_mps.clear();
             for (const std::string& part : split_list(v))
                 c.sweep_speeds_mps.push_back(to_double("sweep.speeds_mps", part));
         }},
        {"sweep.modes",
         [](ExperimentConfig& c, const std::string& v) {
             c.sweep_modes = split_list(v);
         }},
    };
    return table;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    keys.reserve(key_table().size());
    for (const KeyHandler& h : key_table()) keys.push_back(h.key);
    return keys;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value) {
    for (const KeyHandler& h : key_table()) {
        if (key == h.key) {
            h.apply(cfg, value);
            return;
        }
    }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

void parse_config(std::istream& in, ExperimentConfig& cfg) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not key=value");
        apply_setting(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void finalize(ExperimentConfig& cfg) {
    const sim::LedBarLayout& bar = cfg.sim.layout;
    if (bar.leds_per_cluster < 1 || bar.n_leds < bar.leds_per_cluster ||
        bar.n_leds % bar.leds_per_cluster != 0)
        throw std::invalid_argument("config: bar.n_leds must divide into clusters");
    if (cfg.seeds.empty())
        throw std::invalid_argument("config: run.seeds must not be empty");
    cfg.tx.n_clusters = bar.n_clusters();
    cfg.tx.leds_per_cluster = bar.leds_per_cluster;
    const int order = cfg.tx.pilot_len;
    cfg.tx.pilots = codes::pilot_codebook(order, cfg.tx.n_clusters);
    cfg.tx.info_book = cfg.extended_info_book ? codes::extended_codebook(order)
                                              : codes::pilot_codebook(order, order);
}

pipeline::ReceiverParams receiver_params(const ExperimentConfig& cfg) {
    pipeline::ReceiverParams p = cfg.rx;
    p.tx = cfg.tx;
    p.camera = cfg.sim.camera;
    p.layout = cfg.sim.layout;
    return p;
}

double reference_baseline_m(const ExperimentConfig& cfg) {
    const pipeline::ReceiverParams p = receiver_params(cfg);
    if (p.single_pair_mode)
        return p.layout.baseline_m(p.single_pair.first, p.single_pair.second);
    const auto excluded = [&](int k) {
        return std::find(p.excluded_clusters.begin(), p.excluded_clusters.end(), k) !=
               p.excluded_clusters.end();
    };
    double best = 0.0;
    for (int i = 0; i < p.tx.n_clusters; ++i) {
        if (excluded(i)) continue;
        for (int j = i + 1; j < p.tx.n_clusters; ++j) {
            if (excluded(j)) continue;
            const double s = p.layout.baseline_m(i, j);
            if (s >= p.min_baseline_m) best = std::max(best, s);
        }
    }
    if (best <= 0.0)
        throw std::invalid_argument(
            "config: no cluster pair satisfies the ranging constraints");
    return best;
}

int session_frames(const ExperimentConfig& cfg) {
    if (cfg.n_frames > 0) return cfg.n_frames;
    const double dur = cfg.sim.trajectory.duration_s();
    if (!std::isfinite(dur))
        throw std::invalid_argument(
            "session_frames: static trajectory needs an explicit run.n_frames");
    const double preamble_s = double(cfg.tx.preamble.size()) / cfg.tx.blink_rate_hz;
    const int n =
        static_cast<int>(std::floor((dur - preamble_s) / cfg.tx.frame_period_s()));
    if (n < 1)
        throw std::invalid_argument("session_frames: trajectory shorter than one frame");
    return n;
}

tx::Session make_session(const ExperimentConfig& cfg, std::uint64_t seed) {
    const int n_frames = session_frames(cfg);
    return tx::build_session(cfg.tx, tx::random_symbols(cfg.tx, n_frames, seed));
}

TrialResult run_trial(const ExperimentConfig& cfg0, std::uint64_t seed) {
    ExperimentConfig cfg = cfg0;
    cfg.sim.seed = seed;

    TrialResult tr;
    tr.seed = seed;

    const tx::Session session = make_session(cfg, seed);
    const sim::SimResult ch = sim::simulate_events(cfg.sim, session);
    tr.sim_stats = ch.stats;

    pipeline::ReceiveResult rx;
    try {
        rx = pipeline::receive(ch.events, receiver_params(cfg));
    } catch (const frontend::SyncFailed& e) {
        tr.error = e.what();
        return tr;
    }
    tr.frames_total = static_cast<int>(rx.frames.size());
    tr.frames_ranged = rx.frames_ranged();
    tr.realized_update_rate_hz = rx.realized_update_rate_hz;

    const double dur_s = cfg.sim.trajectory.duration_s();
    const double speed = cfg.sim.trajectory.speed_mps;

    std::vector<std::vector<std::optional<int>>> decoded;
    std::vector<std::vector<int>> reference;
    std::vector<double> frame_dist;
    std::vector<std::pair<double, double>> est_truth;

    for (const pipeline::FrameRecord& fr : rx.frames) {
        if (fr.frame_index >= session.n_frames) break;
        double t_s = double(fr.t_us) * 1e-6;
        if (t_s > dur_s) t_s = dur_s;
        if (t_s < 0.0) t_s = 0.0;
        const double truth =
            sim::ground_truth_distance(cfg.sim.trajectory, cfg.sim.layout, t_s);

        RangeRow row;
        row.t_us = fr.t_us;
        row.estimate_m =
            fr.ranged() ? fr.distance_m : std::numeric_limits<double>::quiet_NaN();
        row.truth_m = truth;
        row.n_pairs = fr.n_pairs;
        row.flag = fr.tracking_lost ? "lost"
                   : !fr.ranged()   ? "none"
                   : fr.degraded    ? "degraded"
                                    : "ok";
        tr.range_rows.push_back(std::move(row));
        if (fr.tracking_lost) continue; // carries no symbols or ranges

        std::vector<std::optional<int>> drow(fr.symbols.size());
        for (std::size_t k = 0; k < fr.symbols.size(); ++k)
            if (fr.symbols[k] >= 0) drow[k] = fr.symbols[k];
        decoded.push_back(std::move(drow));
        reference.push_back(session.symbols[fr.frame_index]);
        frame_dist.push_back(truth);

        if (fr.ranged()) est_truth.emplace_back(fr.distance_m, truth);
    }

    tr.ber = vlc::ber(decoded, reference, frame_dist, cfg.tx.bits_per_symbol(), speed);
    tr.rmse_rows = rmse_rows_from_pairs(cfg, est_truth, speed);

    tr.ok = !rx.tracking_lost;
    if (rx.tracking_lost) tr.error = "tracking lost mid-stream";
    return tr;
}

std::vector<RmseRow> rmse_rows_from_pairs(
    const ExperimentConfig& cfg,
    const std::vector<std::pair<double, double>>& est_truth, double speed_mps) {
    struct BinAcc {
        double sq = 0.0;
        std::uint64_t n = 0, ge = 0;
        double max_abs = 0.0;
    };
    std::map<long, BinAcc> bins;
    for (const auto& [est, truth] : est_truth) {
        const double err = est - truth;
        BinAcc& acc = bins[static_cast<long>(std::floor(truth / 10.0)) * 10];
        acc.sq += err * err;
        acc.n += 1;
        if (std::abs(err) >= 0.5) acc.ge += 1;
        acc.max_abs = std::max(acc.max_abs, std::abs(err));
    }
    const double s_ref = reference_baseline_m(cfg);
    std::vector<RmseRow> rows;
    for (const auto& [lo, acc] : bins) {
        RmseRow r;
        r.bin_mid_m = double(lo) + 5.0;
        r.speed_mps = speed_mps;
        r.rmse_m = std::sqrt(acc.sq / double(acc.n));
        r.theory_1px_m = vlp::theoretical_error(r.bin_mid_m, 1.0, s_ref, cfg.sim.camera);
        r.theory_0p5px_m =
            vlp::theoretical_error(r.bin_mid_m, 0.5, s_ref, cfg.sim.camera);
        r.n_frames = acc.n;
        r.n_err_ge_0p5 = acc.ge;
        r.max_abs_err_m = acc.max_abs;
        rows.push_back(r);
    }
    return rows;
}

void write_range_csv(std::ostream& os, const std::vector<RangeRow>& rows) {
    os << "t_us,estimate_m,truth_m,n_pairs,flag\n";
    char buf[160];
    for (const RangeRow& r : rows) {
        int n;
        if (std::isnan(r.estimate_m))
            n = std::snprintf(buf, sizeof buf, "%lld,nan,%.6f,%d,%s\n",
                              static_cast<long long>(r.t_us), r.truth_m, r.n_pairs,
                              r.flag.c_str());
        else
            n = std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f,%d,%s\n",
                              static_cast<long long>(r.t_us), r.estimate_m, r.truth_m,
                              r.n_pairs, r.flag.c_str());
        os.write(buf, n);
    }
}

void write_rmse_csv(std::ostream& os, const std::vector<RmseRow>& rows) {
    os << "bin_mid_m,speed_mps,rmse_m,theory_1px_m,theory_0p5px_m\n";
    char buf[160];
    for (const RmseRow& r : rows) {
        const int n =
            std::snprintf(buf, sizeof buf, "%.1f,%.6f,%.6f,%.6f,%.6f\n", r.bin_mid_m,
                          r.speed_mps, r.rmse_m, r.theory_1px_m, r.theory_0p5px_m);
        os.write(buf, n);
    }
}

void write_ber_csv(std::ostream& os, const vlc::BerReport& report) {
    os << "bin_mid_m,speed_mps,errors,bits,ber\n";
    char buf[160];
    for (const vlc::BerBin& b : report.bins) {
        const int n = std::snprintf(buf, sizeof buf, "%.1f,%.6f,%llu,%llu,%.9f\n",
                                    b.bin_mid_m, b.speed_mps,
                                    static_cast<unsigned long long>(b.errors),
                                    static_cast<unsigned long long>(b.bits), b.ber());
        os.write(buf, n);
    }
}

SweepResult sweep(const ExperimentConfig& cfg) {
    if (cfg.sweep_speeds_mps.empty() || cfg.sweep_modes.empty() || cfg.seeds.empty())
        throw std::invalid_argument("sweep: empty speed/mode/seed grid");
    for (const std::string& m : cfg.sweep_modes)
        if (m != "aggregate" && m != "single_pair")
            throw std::invalid_argument("sweep: unknown mode '" + m + "'");

    SweepResult out;
    for (const double speed : cfg.sweep_speeds_mps)
        for (const std::string& mode : cfg.sweep_modes)
            for (const std::uint64_t seed : cfg.seeds)
                out.cells.push_back(SweepCell{speed, mode, seed});
    out.trials.resize(out.cells.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= out.cells.size()) return;
            ExperimentConfig c = cfg;
            c.sim.trajectory.speed_mps = out.cells[i].speed_mps;
            c.rx.single_pair_mode = out.cells[i].mode == "single_pair";
            try {
                out.trials[i] = run_trial(c, out.cells[i].seed);
            } catch (const std::exception& e) {
                out.trials[i] = TrialResult{};
                out.trials[i].seed = out.cells[i].seed;
                out.trials[i].error = e.what();
            }
        }
    };

    const int n_workers = std::max(
        1, std::min(cfg.workers, static_cast<int>(out.cells.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return out;
}

std::string cell_stem(const SweepCell& cell) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "v%.4f_%s_seed%llu", cell.speed_mps,
                  cell.mode.c_str(), static_cast<unsigned long long>(cell.seed));
    return buf;
}

void write_sweep_summary(std::ostream& os, const ExperimentConfig& cfg,
                         const SweepResult& result) {
    // Expected distance bins from the trajectory end points.
    const sim::Trajectory& traj = cfg.sim.trajectory;
    const double d0 = sim::ground_truth_distance(traj, cfg.sim.layout, 0.0);
    const double d1 =
        sim::ground_truth_distance(traj, cfg.sim.layout, traj.duration_s());
    const long bin_lo = static_cast<long>(std::floor(std::min(d0, d1) / 10.0)) * 10;
    const long bin_hi = static_cast<long>(std::floor(std::max(d0, d1) / 10.0)) * 10;

    os << "speed_mps,mode,bin_mid_m,trials,rmse_mean_m,ber,frac_ge_0p5m\n";
    char buf[240];
    for (const double speed : cfg.sweep_speeds_mps) {
        for (const std::string& mode : cfg.sweep_modes) {
            for (long lo = bin_lo; lo <= bin_hi; lo += 10) {
                const double mid = double(lo) + 5.0;
                int trials = 0;
                double sq_sum = 0.0;
                std::uint64_t n_frames = 0, n_ge = 0, errors = 0, bits = 0;
                for (std::size_t i = 0; i < result.cells.size(); ++i) {
                    const SweepCell& cell = result.cells[i];
                    if (cell.speed_mps != speed || cell.mode != mode) continue;
                    const TrialResult& t = result.trials[i];
                    bool contributed = false;
                    for (const RmseRow& r : t.rmse_rows) {
                        if (r.bin_mid_m != mid) continue;
                        sq_sum += r.rmse_m * r.rmse_m * double(r.n_frames);
                        n_frames += r.n_frames;
                        n_ge += r.n_err_ge_0p5;
                        contributed = true;
                    }
                    for (const vlc::BerBin& b : t.ber.bins) {
                        if (b.bin_mid_m != mid) continue;
                        errors += b.errors;
                        bits += b.bits;
                        contributed = true;
                    }
                    if (contributed) ++trials;
                }
                char rmse_s[32] = "NA", ber_s[32] = "NA", frac_s[32] = "NA";
                if (n_frames > 0) {
                    std::snprintf(rmse_s, sizeof rmse_s, "%.6f",
                                  std::sqrt(sq_sum / double(n_frames)));
                    std::snprintf(frac_s, sizeof frac_s, "%.6f",
                                  double(n_ge) / double(n_frames));
                }
                if (bits > 0)
                    std::snprintf(ber_s, sizeof ber_s, "%.9f",
                                  double(errors) / double(bits));
                const int n =
                    std::snprintf(buf, sizeof buf, "%.6f,%s,%.1f,%d,%s,%s,%s\n", speed,
                                  mode.c_str(), mid, trials, rmse_s, ber_s, frac_s);
                os.write(buf, n);
            }
        }
    }
}

}  // namespace evlink::experiment
