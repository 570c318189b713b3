#include "grft/scenario/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace grft {
namespace {

static_assert(std::endian::native == std::endian::little, "codec assumes a little-endian host");

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void count(std::size_t n) {
    if (n > std::numeric_limits<std::uint32_t>::max()) {
      throw CodecError(CodecError::Kind::kOverflow, "encode: element count exceeds u32");
    }
    u32(static_cast<std::uint32_t>(n));
  }
  void points(const std::vector<Vec2>& pts) {
    count(pts.size());
    for (const auto& p : pts) {
      f64(p.x());
      f64(p.y());
    }
  }
  void section(const Writer& payload) {
    count(payload.buf_.size());
    buf_.insert(buf_.end(), payload.buf_.begin(), payload.buf_.end());
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint16_t u16() { std::uint16_t v; raw(&v, 2); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }

  /// Element count, sanity-checked against the bytes left so corrupt counts fail fast.
  std::size_t count(std::size_t min_elem_bytes) {
    const std::size_t n = u32();
    if (min_elem_bytes > 0 && n > remaining() / min_elem_bytes) {
      throw CodecError(CodecError::Kind::kSectionLengthMismatch,
                       std::string("decode: element count overruns section ") + what_);
    }
    return n;
  }
  std::vector<Vec2> points() {
    const std::size_t n = count(16);
    std::vector<Vec2> out(n);
    for (auto& p : out) {
      p.x() = f64();
      p.y() = f64();
    }
    return out;
  }
  Reader section(const char* name) {
    const std::size_t n = u32();
    if (n > remaining()) {
      throw CodecError(CodecError::Kind::kTruncated, std::string("decode: truncated section ") + name);
    }
    Reader sub(bytes_.subspan(pos_, n), name);
    pos_ += n;
    return sub;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void expect_consumed() const {
    if (remaining() != 0) {
      throw CodecError(CodecError::Kind::kSectionLengthMismatch,
                       std::string("decode: section length mismatch in ") + what_);
    }
  }

 private:
  void raw(void* out, std::size_t n) {
    if (remaining() < n) {
      throw CodecError(CodecError::Kind::kTruncated, std::string("decode: truncated ") + what_);
    }
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  const char* what_;
};

constexpr char kMagic[4] = {'N', 'M', 'X', '1'};

}  // namespace

std::vector<std::uint8_t> encode_scenario(const Scenario& s) {
  Writer out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u16(kScenarioFormatVersion);

  Writer header;
  header.u8(static_cast<std::uint8_t>(s.kind));
  header.u64(s.seed);
  header.u8(static_cast<std::uint8_t>(s.tier));
  header.f64(s.dt);
  header.f64(s.crop_radius);
  header.count(s.ego_log.size());
  header.count(s.route.size());
  for (auto id : s.route) header.u32(id);
  out.section(header);

  Writer lanes;
  lanes.count(s.lanes.size());
  for (const auto& lane : s.lanes) {
    lanes.u32(lane.id);
    lanes.f64(lane.speed_limit);
    lanes.points(lane.centerline);
    lanes.points(lane.direction_hint);
    lanes.points(lane.polygon);
  }
  out.section(lanes);

  Writer agents;
  agents.count(s.agents.size());
  for (const auto& a : s.agents) {
    agents.u32(a.id);
    agents.u8(static_cast<std::uint8_t>(a.kind));
    agents.f64(a.length);
    agents.f64(a.width);
    agents.count(a.poses.size());
    for (const auto& p : a.poses) {
      agents.f64(p.x);
      agents.f64(p.y);
      agents.f64(p.heading);
      agents.f64(p.speed);
      agents.u8(p.valid ? 1 : 0);
    }
  }
  out.section(agents);

  Writer statics;
  statics.count(s.statics.size());
  for (const auto& b : s.statics) {
    statics.f64(b.center.x());
    statics.f64(b.center.y());
    statics.f64(b.heading);
    statics.f64(b.length);
    statics.f64(b.width);
  }
  out.section(statics);

  Writer ego;
  ego.count(s.ego_log.size());
  for (const auto& e : s.ego_log) {
    ego.f64(e.x);
    ego.f64(e.y);
    ego.f64(e.heading);
    ego.f64(e.speed);
    ego.f64(e.accel);
    ego.f64(e.steer);
  }
  out.section(ego);
  return out.take();
}

Scenario decode_scenario(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin(),
                                      [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw CodecError(CodecError::Kind::kBadMagic, "decode: bad magic");
  }
  Reader in(bytes.subspan(4), "record");
  const std::uint16_t version = in.u16();
  if (version != kScenarioFormatVersion) {
    throw CodecError(CodecError::Kind::kUnsupportedVersion,
                     "decode: unsupported version " + std::to_string(version));
  }

  Scenario s;
  {
    Reader h = in.section("header");
    const std::uint8_t kind = h.u8();
    if (kind > static_cast<std::uint8_t>(ScenarioKind::kConeGap)) {
      throw CodecError(CodecError::Kind::kSectionLengthMismatch, "decode: unknown scenario kind");
    }
    s.kind = static_cast<ScenarioKind>(kind);
    s.seed = h.u64();
    s.tier = static_cast<DifficultyTier>(h.u8());
    s.dt = h.f64();
    s.crop_radius = h.f64();
    const std::size_t frames = h.u32();
    s.ego_log.reserve(frames);
    const std::size_t route_len = h.count(4);
    s.route.resize(route_len);
    for (auto& id : s.route) id = h.u32();
    h.expect_consumed();
  }
  {
    Reader l = in.section("lanes");
    const std::size_t n = l.count(24);
    s.lanes.resize(n);
    for (auto& lane : s.lanes) {
      lane.id = l.u32();
      lane.speed_limit = l.f64();
      lane.centerline = l.points();
      lane.direction_hint = l.points();
      lane.polygon = l.points();
    }
    l.expect_consumed();
  }
  {
    Reader a = in.section("agents");
    const std::size_t n = a.count(25);
    s.agents.resize(n);
    for (auto& agent : s.agents) {
      agent.id = a.u32();
      agent.kind = static_cast<AgentKind>(a.u8());
      agent.length = a.f64();
      agent.width = a.f64();
      agent.poses.resize(a.count(33));
      for (auto& p : agent.poses) {
        p.x = a.f64();
        p.y = a.f64();
        p.heading = a.f64();
        p.speed = a.f64();
        p.valid = a.u8() != 0;
      }
    }
    a.expect_consumed();
  }
  {
    Reader st = in.section("statics");
    s.statics.resize(st.count(40));
    for (auto& b : s.statics) {
      b.center.x() = st.f64();
      b.center.y() = st.f64();
      b.heading = st.f64();
      b.length = st.f64();
      b.width = st.f64();
    }
    st.expect_consumed();
  }
  {
    Reader e = in.section("ego_log");
    s.ego_log.resize(e.count(48));
    for (auto& st : s.ego_log) {
      st.x = e.f64();
      st.y = e.f64();
      st.heading = e.f64();
      st.speed = e.f64();
      st.accel = e.f64();
      st.steer = e.f64();
    }
    e.expect_consumed();
  }
  if (in.remaining() != 0) throw CodecError(CodecError::Kind::kTrailingData, "decode: trailing bytes");
  return s;
}

void write_scenario_file(const std::filesystem::path& path, const Scenario& s) {
  const auto bytes = encode_scenario(s);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Scenario read_scenario_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_scenario(bytes);
}

std::vector<Scenario> load_scenario_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".nmx") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  out.reserve(files.size());
  for (const auto& p : files) out.push_back(read_scenario_file(p));
  return out;
}

}  // namespace grft
