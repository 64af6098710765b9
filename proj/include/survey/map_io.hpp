#pragma once

#include <filesystem>
#include <iosfwd>

#include "survey/radio_map.hpp"

namespace survey {

// Textual map format, one keyword per header line, '#' starts a comment:
//
//   radiomap 1
//   rows <R>
//   cols <C>
//   spacing_m <s>
//   origin_m <x> <y>
//   transmitters <T>
//   known_transmitters <K>           K is 0 (e.g. ray-traced import) or T
//   tx <x> <y> <z> <power_dbm> <carrier_hz>      repeated K times
//   power_db <t>                     repeated T times, followed by R lines
//   <C values>                       of C row-major dB values
//   buildings <B>
//   <B flat indices>                 whitespace separated, may span lines
//
// Numbers are written with 17 significant digits so a save/load round trip is
// exact.

void write_map_text(std::ostream& out, const RadioMap& map);
RadioMap read_map_text(std::istream& in);

void save_map(const std::filesystem::path& path, const RadioMap& map);
RadioMap load_map(const std::filesystem::path& path);

/// Human-readable CSV: row,col,x_m,y_m,building,tx0_db,...,combined_db.
void write_map_csv(std::ostream& out, const RadioMap& map);
void save_map_csv(const std::filesystem::path& path, const RadioMap& map);

}  // namespace survey
