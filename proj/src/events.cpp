#include "evlink/events.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace evlink {

bool event_less(const Event& a, const Event& b) {
    if (a.t_us != b.t_us) return a.t_us < b.t_us;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.p < b.p;
}

void sort_events(std::vector<Event>& events) {
    std::sort(events.begin(), events.end(), event_less);
}

bool events_sorted(const std::vector<Event>& events) {
    return std::is_sorted(events.begin(), events.end(), event_less);
}

void write_events_csv(std::ostream& os, const std::vector<Event>& events) {
    os << "t_us,x,y,p\n";
    char buf[64];
    for (const Event& e : events) {
        const int n = std::snprintf(buf, sizeof buf, "%lld,%u,%u,%d\n",
                                    static_cast<long long>(e.t_us), unsigned(e.x),
                                    unsigned(e.y), e.p > 0 ? 1 : 0);
        os.write(buf, n);
    }
}

namespace {

long long parse_field(const char*& p, const char* end, int line, bool last) {
    long long v = 0;
    const auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc{})
        throw std::runtime_error("events csv: bad number on line " + std::to_string(line));
    p = res.ptr;
    if (!last) {
        if (p >= end || *p != ',')
            throw std::runtime_error("events csv: expected ',' on line " + std::to_string(line));
        ++p;
    }
    return v;
}

}  // namespace

std::vector<Event> read_events_csv(std::istream& is) {
    std::vector<Event> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != "t_us,x,y,p" && line != "t_us,x,y,p\r")
                throw std::runtime_error("events csv: missing 't_us,x,y,p' header");
            continue;
        }
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        Event e;
        e.t_us = parse_field(p, end, lineno, false);
        e.x = static_cast<std::uint16_t>(parse_field(p, end, lineno, false));
        e.y = static_cast<std::uint16_t>(parse_field(p, end, lineno, false));
        const long long pol = parse_field(p, end, lineno, true);
        if (pol != 0 && pol != 1)
            throw std::runtime_error("events csv: polarity must be 0 or 1 on line " +
                                     std::to_string(lineno));
        e.p = pol ? 1 : -1;
        out.push_back(e);
    }
    return out;
}

void write_events_bin(std::ostream& os, const std::vector<Event>& events) {
    std::array<unsigned char, 13> rec;
    for (const Event& e : events) {
        const std::uint64_t t = static_cast<std::uint64_t>(e.t_us);
        for (int i = 0; i < 8; ++i) rec[i] = static_cast<unsigned char>(t >> (8 * i));
        rec[8] = static_cast<unsigned char>(e.x & 0xff);
        rec[9] = static_cast<unsigned char>(e.x >> 8);
        rec[10] = static_cast<unsigned char>(e.y & 0xff);
        rec[11] = static_cast<unsigned char>(e.y >> 8);
        rec[12] = static_cast<unsigned char>(static_cast<std::int8_t>(e.p));
        os.write(reinterpret_cast<const char*>(rec.data()), rec.size());
    }
}

std::vector<Event> read_events_bin(std::istream& is) {
    std::vector<Event> out;
    std::array<unsigned char, 13> rec;
    while (is.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
        Event e;
        std::uint64_t t = 0;
        for (int i = 0; i < 8; ++i) t |= std::uint64_t(rec[i]) << (8 * i);
        e.t_us = static_cast<std::int64_t>(t);
        e.x = static_cast<std::uint16_t>(rec[8] | (rec[9] << 8));
        e.y = static_cast<std::uint16_t>(rec[10] | (rec[11] << 8));
        e.p = static_cast<std::int8_t>(rec[12]);
        if (e.p != 1 && e.p != -1)
            throw std::runtime_error("events bin: polarity byte must be +1 or -1");
        out.push_back(e);
    }
    if (is.gcount() != 0)
        throw std::runtime_error("events bin: trailing partial record");
    return out;
}

void save_events(const std::string& path, const std::vector<Event>& events) {
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    std::ofstream os(path, csv ? std::ios::out : std::ios::out | std::ios::binary);
    if (!os) throw std::runtime_error("save_events: cannot open " + path);
    if (csv)
        write_events_csv(os, events);
    else
        write_events_bin(os, events);
    if (!os) throw std::runtime_error("save_events: write failed for " + path);
}

std::vector<Event> load_events(const std::string& path) {
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    std::ifstream is(path, csv ? std::ios::in : std::ios::in | std::ios::binary);
    if (!is) throw std::runtime_error("load_events: cannot open " + path);
    return csv ? read_events_csv(is) : read_events_bin(is);
}

}  // namespace evlink
