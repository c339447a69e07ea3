#include "foveate/event_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace foveate {

namespace {

template <typename T>
void put_le(unsigned char* dst, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFFU);
  }
}

template <typename T>
T get_le(const unsigned char* src) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  return static_cast<T>(v);
}

template <typename T>
T parse_field(std::string_view s, std::size_t line) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw Error("event csv line " + std::to_string(line) + ": bad field '" + std::string(s) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void write_events_binary(std::ostream& os, const EventStream& stream) {
  std::array<unsigned char, kEventHeaderBytes> header{};
  std::memcpy(header.data(), "EVST", 4);
  put_le<std::uint16_t>(header.data() + 4, kEventFileVersion);
  put_le<std::uint16_t>(header.data() + 6, static_cast<std::uint16_t>(stream.geometry.width));
  put_le<std::uint16_t>(header.data() + 8, static_cast<std::uint16_t>(stream.geometry.height));
  os.write(reinterpret_cast<const char*>(header.data()), header.size());

  std::array<unsigned char, kEventRecordBytes> rec{};
  for (const Event& e : stream.events) {
    rec.fill(0);
    put_le<std::uint64_t>(rec.data(), e.t);
    put_le<std::uint16_t>(rec.data() + 8, e.x);
    put_le<std::uint16_t>(rec.data() + 10, e.y);
    rec[12] = static_cast<unsigned char>(e.polarity);
    os.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  }
  if (!os) throw Error("event file: write failed");
}

EventStream read_events_binary(std::istream& is) {
  std::array<unsigned char, kEventHeaderBytes> header{};
  is.read(reinterpret_cast<char*>(header.data()), header.size());
  if (is.gcount() != static_cast<std::streamsize>(header.size())) {
    throw Error("event file: truncated header");
  }
  if (std::memcmp(header.data(), "EVST", 4) != 0) throw Error("event file: bad magic");
  const auto version = get_le<std::uint16_t>(header.data() + 4);
  if (version != kEventFileVersion) {
    throw Error("event file: unsupported version " + std::to_string(version));
  }

  EventStream stream;
  stream.geometry.width = get_le<std::uint16_t>(header.data() + 6);
  stream.geometry.height = get_le<std::uint16_t>(header.data() + 8);

  std::array<unsigned char, kEventRecordBytes> rec{};
  while (true) {
    is.read(reinterpret_cast<char*>(rec.data()), rec.size());
    const auto got = is.gcount();
    if (got == 0) break;
    if (got != static_cast<std::streamsize>(rec.size())) {
      throw Error("event file: truncated record " + std::to_string(stream.events.size()));
    }
    const unsigned char p = rec[12];
    if (p > 1) throw Error("event file: bad polarity byte " + std::to_string(p));
    stream.events.push_back(Event{get_le<std::uint64_t>(rec.data()),
                                  get_le<std::uint16_t>(rec.data() + 8),
                                  get_le<std::uint16_t>(rec.data() + 10),
                                  static_cast<Polarity>(p)});
  }
  return stream;
}

void write_events_csv(std::ostream& os, const EventStream& stream) {
  os << "t,x,y,p\n";
  for (const Event& e : stream.events) {
    os << e.t << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.polarity) << '\n';
  }
}

EventStream read_events_csv(std::istream& is, Geometry g) {
  EventStream stream;
  stream.geometry = g;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (sv != "t,x,y,p") throw Error("event csv: expected header 't,x,y,p'");
      continue;
    }
    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (std::size_t f = 0; f < 4; ++f) {
      const std::size_t comma = sv.find(',', start);
      if ((comma == std::string_view::npos) != (f == 3)) {
        throw Error("event csv line " + std::to_string(lineno) + ": expected 4 fields");
      }
      fields[f] = trim(sv.substr(start, comma == std::string_view::npos ? sv.size() - start
                                                                         : comma - start));
      start = comma + 1;
    }
    const auto p = parse_field<int>(fields[3], lineno);
    if (p != 0 && p != 1) throw Error("event csv line " + std::to_string(lineno) + ": bad polarity");
    stream.events.push_back(Event{parse_field<std::uint64_t>(fields[0], lineno),
                                  parse_field<std::uint16_t>(fields[1], lineno),
                                  parse_field<std::uint16_t>(fields[2], lineno),
                                  static_cast<Polarity>(p)});
  }
  if (!header_seen) throw Error("event csv: empty file");
  return stream;
}

void save_events(const std::filesystem::path& path, const EventStream& stream) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  if (path.extension() == ".csv") {
    write_events_csv(os, stream);
  } else {
    write_events_binary(os, stream);
  }
}

EventStream load_events(const std::filesystem::path& path, Geometry csv_geometry) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  if (path.extension() == ".csv") return read_events_csv(is, csv_geometry);
  return read_events_binary(is);
}

}  // namespace foveate
