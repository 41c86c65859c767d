#include "evlink/vlc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

namespace evlink::vlc {

IntegratedInfo integrate_info(const presence::PresenceMap& map, int cluster,
                              const std::vector<codes::Chips>& info_pairs,
                              double threshold) {
    if (cluster < 0 || cluster >= static_cast<int>(map.w.size()))
        throw std::invalid_argument("integrate_info: no such cluster");
    if (static_cast<int>(info_pairs.size()) != map.n_cells())
        throw std::invalid_argument("integrate_info: one info segment per cell required");
    IntegratedInfo out;
    for (int cell = 0; cell < map.n_cells(); ++cell) {
        const double w = map.w[cluster][cell];
        if (w < threshold) continue;
        const codes::Chips& seg = info_pairs[cell];
        if (out.value.empty()) out.value.assign(seg.size(), 0.0);
        if (seg.size() != out.value.size())
            throw std::invalid_argument("integrate_info: ragged info segments");
        for (size_t i = 0; i < seg.size(); ++i) out.value[i] += w * double(seg[i]);
        ++out.n_cells;
    }
    return out;
}

DecodedFrame decode_frame(const std::vector<double>& integrated,
                          const std::vector<codes::Codeword>& info_book) {
    if (info_book.empty())
        throw std::invalid_argument("decode_frame: empty codebook");
    DecodedFrame out;
    bool all_zero = true;
    for (const double v : integrated)
        if (v != 0.0) {
            all_zero = false;
            break;
        }
    if (integrated.empty() || all_zero) {
        out.failed = true;
        return out;
    }
    std::vector<codes::Codeword> sig_book;
    sig_book.reserve(info_book.size());
    for (const auto& cw : info_book)
        sig_book.push_back(codes::Codeword{cw.id, codes::pair_signature(cw)});
    out.match = codes::wh_transform_decode(integrated, sig_book);
    for (size_t i = 0; i < info_book.size(); ++i)
        if (info_book[i].id == out.match.id) {
            out.symbol = static_cast<int>(i);
            break;
        }
    return out;
}

BerReport ber(const std::vector<std::vector<std::optional<int>>>& decoded,
              const std::vector<std::vector<int>>& reference,
              const std::vector<double>& frame_distance_m, int bits_per_symbol,
              double speed_mps) {
    if (decoded.size() != reference.size() || decoded.size() != frame_distance_m.size())
        throw std::invalid_argument("ber: decoded/reference/distance lengths differ");
    if (bits_per_symbol < 1)
        throw std::invalid_argument("ber: bits_per_symbol must be >= 1");

    BerReport report;
    std::map<long, BerBin> bins;
    const unsigned mask = bits_per_symbol >= 32 ? ~0u : ((1u << bits_per_symbol) - 1u);
    for (size_t f = 0; f < decoded.size(); ++f) {
        if (decoded[f].size() != reference[f].size())
            throw std::invalid_argument("ber: frame shapes differ");
        const long bin_lo = static_cast<long>(std::floor(frame_distance_m[f] / 10.0)) * 10;
        BerBin& bin = bins[bin_lo];
        bin.bin_mid_m = double(bin_lo) + 5.0;
        bin.speed_mps = speed_mps;
        for (size_t k = 0; k < decoded[f].size(); ++k) {
            unsigned err;
            if (!decoded[f][k].has_value())
                err = static_cast<unsigned>(bits_per_symbol); // erasure: all bits count
            else
                err = static_cast<unsigned>(std::popcount(
                    (unsigned(*decoded[f][k]) ^ unsigned(reference[f][k])) & mask));
            bin.errors += err;
            bin.bits += static_cast<unsigned>(bits_per_symbol);
        }
    }
    for (auto& [lo, bin] : bins) {
        report.errors += bin.errors;
        report.bits += bin.bits;
        report.bins.push_back(bin);
    }
    return report;
}

}  // namespace evlink::vlc
