#pragma once

#include <filesystem>
#include <iosfwd>

#include "foveate/events.hpp"

namespace foveate {

/// Canonical event file (little endian):
///
///   header, 16 bytes : "EVST" | version u16 | width u16 | height u16 | 6 reserved bytes
///   record, 16 bytes : t u64 (us) | x u16 | y u16 | polarity u8 (0 OFF, 1 ON) | 3 pad bytes
///
/// The CSV variant has a `t,x,y,p` header line followed by one event per line.
inline constexpr std::uint16_t kEventFileVersion = 1;
inline constexpr std::size_t kEventHeaderBytes = 16;
inline constexpr std::size_t kEventRecordBytes = 16;

void write_events_binary(std::ostream& os, const EventStream& stream);
EventStream read_events_binary(std::istream& is);

void write_events_csv(std::ostream& os, const EventStream& stream);
/// CSV carries no geometry, so it must be supplied.
EventStream read_events_csv(std::istream& is, Geometry g);

void save_events(const std::filesystem::path& path, const EventStream& stream);
/// Dispatches on extension: `.csv` is parsed as CSV (needs `csv_geometry`), anything else as binary.
EventStream load_events(const std::filesystem::path& path, Geometry csv_geometry = {128, 128});

}  // namespace foveate
