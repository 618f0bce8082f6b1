#pragma once

#include <filesystem>
#include <string_view>

#include "eepn/channel.hpp"

namespace eepn {

/// Binary reception record:
///   8 bytes   magic "EEPNREC1"
///   8 bytes   little-endian uint64 header length H
///   H bytes   UTF-8 JSON header {"config", "length", "fields"}
///   arrays    x, phi_tx, phi_lo, n, y in that order; complex arrays are
///             interleaved re/im, every value an IEEE-754 little-endian double
inline constexpr std::string_view kRecordMagic = "EEPNREC1";

void write_record(const std::filesystem::path& path, const ReceptionRecord& record);
/// Throws ConfigError on a malformed or truncated file.
ReceptionRecord read_record(const std::filesystem::path& path);

}  // namespace eepn
