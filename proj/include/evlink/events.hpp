// Event record type and stream I/O.
//
// An event is (timestamp in integer microseconds, pixel x/y, polarity +/-1).
// Streams are kept sorted by (t, y, x, p). Two on-disk forms:
//   CSV    header "t_us,x,y,p", one record per line, p written as 1/0 for
//          polarity +1/-1;
//   binary little-endian records of u64 t_us, u16 x, u16 y, s8 polarity
//          (13 bytes per record, no padding, no header).

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace evlink {

struct Event {
    std::int64_t t_us = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1; // +1 or -1

    friend bool operator==(const Event&, const Event&) = default;
};

// Canonical stream order: (t, y, x, p).
bool event_less(const Event& a, const Event& b);
void sort_events(std::vector<Event>& events);
bool events_sorted(const std::vector<Event>& events);

void write_events_csv(std::ostream& os, const std::vector<Event>& events);
std::vector<Event> read_events_csv(std::istream& is);

void write_events_bin(std::ostream& os, const std::vector<Event>& events);
std::vector<Event> read_events_bin(std::istream& is);

// Path helpers; throw std::runtime_error on I/O failure. Format picked by
// extension: ".csv" text, anything else binary.
void save_events(const std::string& path, const std::vector<Event>& events);
std::vector<Event> load_events(const std::string& path);

}  // namespace evlink
