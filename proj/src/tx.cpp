#include "evlink/tx.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "evlink/rng.hpp"

namespace evlink::tx {

int TxConfig::bits_per_symbol() const {
    int bits = 0;
    while ((size_t{1} << (bits + 1)) <= info_book.size()) ++bits;
    return bits;
}

codes::Chips spread_info(int symbol, const std::vector<codes::Codeword>& info_book) {
    if (symbol < 0 || symbol >= static_cast<int>(info_book.size()))
        throw std::invalid_argument("spread_info: symbol " + std::to_string(symbol) +
                                    " outside codebook of size " +
                                    std::to_string(info_book.size()));
    return info_book[symbol].chips;
}

namespace {

void check_config(const TxConfig& c) {
    if (c.blink_rate_hz <= 0.0)
        throw std::invalid_argument("build_session: blink rate must be positive");
    if (static_cast<int>(c.pilots.size()) < c.n_clusters)
        throw std::invalid_argument("build_session: need a pilot codeword per cluster");
    for (int k = 0; k < c.n_clusters; ++k)
        if (static_cast<int>(c.pilots[k].chips.size()) != c.pilot_len)
            throw std::invalid_argument("build_session: pilot codeword length != pilot_len");
    if (c.info_book.empty())
        throw std::invalid_argument("build_session: empty info codebook");
    for (const auto& cw : c.info_book)
        if (static_cast<int>(cw.chips.size()) != c.info_len)
            throw std::invalid_argument("build_session: info codeword length != info_len");
}

}  // namespace

Session build_session(const TxConfig& config,
                      const std::vector<std::vector<int>>& symbols) {
    check_config(config);
    Session s;
    s.config = config;
    s.n_frames = static_cast<int>(symbols.size());
    s.symbols = symbols;
    for (const auto& frame : symbols)
        if (static_cast<int>(frame.size()) != config.n_clusters)
            throw std::invalid_argument("build_session: each frame needs one symbol per cluster");

    const int total = static_cast<int>(config.preamble.size()) +
                      s.n_frames * config.frame_chips();
    s.streams.resize(config.n_clusters);
    for (int k = 0; k < config.n_clusters; ++k) {
        ClusterStream& cs = s.streams[k];
        cs.cluster = k;
        cs.chips.reserve(total);
        cs.chips.insert(cs.chips.end(), config.preamble.begin(), config.preamble.end());
        for (int f = 0; f < s.n_frames; ++f) {
            const codes::Chips& pilot = config.pilots[k].chips;
            cs.chips.insert(cs.chips.end(), pilot.begin(), pilot.end());
            const codes::Chips info = spread_info(symbols[f][k], config.info_book);
            cs.chips.insert(cs.chips.end(), info.begin(), info.end());
        }
    }
    return s;
}

std::vector<std::vector<int>> random_symbols(const TxConfig& config, int n_frames,
                                             std::uint64_t seed) {
    std::mt19937_64 g(derive_seed(seed, 0x70a11d5ull));
    std::vector<std::vector<int>> out(n_frames, std::vector<int>(config.n_clusters));
    for (auto& frame : out)
        for (auto& sym : frame)
            sym = static_cast<int>(uniform_index(g, config.info_book.size()));
    return out;
}

RateReport nominal_data_rate(const TxConfig& config, int bits_per_symbol) {
    if (bits_per_symbol < 1)
        throw std::invalid_argument("nominal_data_rate: bits_per_symbol must be >= 1");
    RateReport r;
    r.frame_period_s = config.frame_period_s();
    r.update_rate_hz = config.update_rate_hz();
    r.total_bps = config.n_clusters * bits_per_symbol * r.update_rate_hz;
    r.per_led_bps = per_led_rate(r.total_bps, config.n_leds());
    return r;
}

double per_led_rate(double total_bps, int n_leds) {
    if (n_leds < 1) throw std::invalid_argument("per_led_rate: n_leds must be >= 1");
    return total_bps / n_leds;
}

void write_chip_trace(std::ostream& os, const Session& session) {
    os << "time_us,cluster_id,chip\n";
    const int total = session.chips_per_cluster();
    for (int i = 0; i < total; ++i) {
        const long long t = std::llround(session.boundary_us(i));
        for (const ClusterStream& cs : session.streams)
            os << t << ',' << cs.cluster << ',' << int(cs.chips[i]) << '\n';
    }
}

}  // namespace evlink::tx
