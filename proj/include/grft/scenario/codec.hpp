#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grft/scenario/scenario.hpp"

namespace grft {

/// `.nmx` scenario record, all integers and IEEE-754 doubles little-endian:
///
///   "NMX1" | u16 version (=1)
///   5 x { u32 payload_bytes | payload }  in the order header, lanes, agents, statics, ego_log
///
///   header : u8 kind, u64 seed, u8 tier, f64 dt, f64 crop_radius, u32 frames,
///            u32 route_len, u32 lane_id x route_len
///   lanes  : u32 n, per lane { u32 id, f64 speed_limit, u32 nc, (f64 x, f64 y) x nc,
///            u32 nh, (f64 dx, f64 dy) x nh, u32 np, (f64 x, f64 y) x np }
///   agents : u32 n, per agent { u32 id, u8 kind, f64 length, f64 width, u32 nposes,
///            (f64 x, f64 y, f64 heading, f64 speed, u8 valid) x nposes }
///   statics: u32 n, per box { f64 cx, f64 cy, f64 heading, f64 length, f64 width }
///   ego_log: u32 n, (f64 x, f64 y, f64 heading, f64 speed, f64 accel, f64 steer) x n
inline constexpr std::uint16_t kScenarioFormatVersion = 1;

class CodecError : public std::runtime_error {
 public:
  enum class Kind { kBadMagic, kUnsupportedVersion, kSectionLengthMismatch, kTruncated, kTrailingData, kOverflow };

  CodecError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> encode_scenario(const Scenario& s);
Scenario decode_scenario(std::span<const std::uint8_t> bytes);

void write_scenario_file(const std::filesystem::path& path, const Scenario& s);
Scenario read_scenario_file(const std::filesystem::path& path);

/// All `.nmx` files of a directory, sorted by file name.
std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir);

}  // namespace grft
