#include "amt/score.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <tuple>

#include "amt/error.hpp"
#include "amt/log.hpp"

namespace amt {
namespace {

constexpr int kWriteTicksPerQuarter = 480;
constexpr int64_t kWriteTempo = 500000;  // 120 BPM

class Reader {
 public:
  Reader(const uint8_t* begin, const uint8_t* end) : p_(begin), end_(end) {}

  bool done() const { return p_ >= end_; }
  size_t remaining() const { return size_t(end_ - p_); }

  uint8_t u8() {
    if (p_ >= end_) throw Error(ErrorCode::MalformedFile, "unexpected end of MIDI data");
    return *p_++;
  }
  uint8_t peek() const {
    if (p_ >= end_) throw Error(ErrorCode::MalformedFile, "unexpected end of MIDI data");
    return *p_;
  }
  uint32_t u16() {
    const uint32_t hi = u8();
    return hi << 8 | u8();
  }
  uint32_t u32() {
    const uint32_t hi = u16();
    return hi << 16 | u16();
  }
  uint32_t vlq() {
    uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
      uint8_t b = u8();
      value = (value << 7) | (b & 0x7f);
      if (!(b & 0x80)) return value;
    }
    throw Error(ErrorCode::MalformedFile, "variable-length quantity too long");
  }
  void skip(size_t n) {
    if (n > remaining()) throw Error(ErrorCode::MalformedFile, "chunk overruns MIDI data");
    p_ += n;
  }
  const uint8_t* pos() const { return p_; }

 private:
  const uint8_t* p_;
  const uint8_t* end_;
};

struct RawNote {
  int64_t on_tick;
  int64_t off_tick;
  int pitch;
  int velocity;
};

void put_vlq(std::vector<uint8_t>& out, uint32_t value) {
  uint8_t buf[5];
  int n = 0;
  buf[n++] = uint8_t(value & 0x7f);
  while (value >>= 7) buf[n++] = uint8_t((value & 0x7f) | 0x80);
  while (n) out.push_back(buf[--n]);
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(uint8_t((v >> s) & 0xff));
}

// Converts ticks to seconds through a sorted tempo map.
class TickClock {
 public:
  TickClock(std::vector<TempoChange> map, double ticks_per_quarter, double smpte_ticks_per_second)
      : map_(std::move(map)), tpq_(ticks_per_quarter), smpte_(smpte_ticks_per_second) {
    std::stable_sort(map_.begin(), map_.end(),
                     [](const TempoChange& a, const TempoChange& b) { return a.tick < b.tick; });
  }

  double seconds(int64_t tick) const {
    if (smpte_ > 0.0) return double(tick) / smpte_;
    double sec = 0.0;
    int64_t last_tick = 0;
    double tempo = 500000.0;
    for (const auto& change : map_) {
      if (change.tick >= tick) break;
      sec += double(change.tick - last_tick) * tempo / (tpq_ * 1e6);
      last_tick = change.tick;
      tempo = double(change.us_per_quarter);
    }
    return sec + double(tick - last_tick) * tempo / (tpq_ * 1e6);
  }

 private:
  std::vector<TempoChange> map_;
  double tpq_;
  double smpte_;
};

}  // namespace

void ScoreTrack::sort_events() {
  std::stable_sort(events.begin(), events.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return std::tie(a.onset, a.pitch, a.offset) < std::tie(b.onset, b.pitch, b.offset);
  });
}

ScoreTrack track_from_events(std::vector<NoteEvent> events, double duration) {
  ScoreTrack track;
  track.events = std::move(events);
  track.sort_events();
  track.tempo_map = {{0, kWriteTempo}};
  double end = duration;
  for (const auto& e : track.events) end = std::max(end, e.offset);
  track.duration = end;
  return track;
}

ScoreTrack parse_midi(const std::vector<uint8_t>& bytes) {
  Reader r(bytes.data(), bytes.data() + bytes.size());
  if (bytes.size() < 14 || std::string(bytes.begin(), bytes.begin() + 4) != "MThd") {
    throw Error(ErrorCode::MalformedFile, "missing MThd header");
  }
  r.skip(4);
  const uint32_t header_len = r.u32();
  if (header_len < 6) throw Error(ErrorCode::MalformedFile, "short MThd header");
  const uint32_t format = r.u16();
  const uint32_t n_tracks = r.u16();
  const uint32_t division = r.u16();
  r.skip(header_len - 6);
  if (format > 1) throw Error(ErrorCode::MalformedFile, "only SMF type 0 and 1 are supported");

  ScoreTrack track;
  double smpte_rate = 0.0;
  if (division & 0x8000) {
    const int fps = -int(int8_t(division >> 8));
    const int per_frame = int(division & 0xff);
    if (fps <= 0 || per_frame <= 0) throw Error(ErrorCode::MalformedFile, "invalid SMPTE division");
    smpte_rate = double(fps == 29 ? 29.97 : fps) * per_frame;
    track.ticks_per_quarter = 0;
  } else {
    track.ticks_per_quarter = int(division);
    if (track.ticks_per_quarter == 0) throw Error(ErrorCode::MalformedFile, "zero ticks per quarter");
  }

  std::vector<RawNote> notes;
  int64_t end_tick = 0;

  for (uint32_t trk = 0; trk < n_tracks; ++trk) {
    // Skip unknown chunks until the next MTrk.
    uint32_t len = 0;
    for (;;) {
      if (r.remaining() < 8) throw Error(ErrorCode::MalformedFile, "missing MTrk chunk");
      const uint8_t* tag = r.pos();
      r.skip(4);
      len = r.u32();
      if (std::equal(tag, tag + 4, "MTrk")) break;
      r.skip(len);
    }
    if (len > r.remaining()) throw Error(ErrorCode::MalformedFile, "MTrk length overruns file");
    Reader tr(r.pos(), r.pos() + len);
    r.skip(len);

    std::map<std::pair<int, int>, std::deque<std::pair<int64_t, int>>> open;
    int64_t tick = 0;
    uint8_t running = 0;
    while (!tr.done()) {
      tick += tr.vlq();
      uint8_t status = tr.peek();
      if (status & 0x80) {
        tr.u8();
      } else {
        if (!running) throw Error(ErrorCode::MalformedFile, "data byte without running status");
        status = running;
      }

      if (status == 0xff) {
        const uint8_t type = tr.u8();
        const uint32_t n = tr.vlq();
        if (type == 0x51 && n == 3) {
          int64_t tempo = 0;
          for (int i = 0; i < 3; ++i) tempo = tempo << 8 | tr.u8();
          track.tempo_map.push_back({tick, tempo});
        } else if (type == 0x2f) {
          tr.skip(n);
          break;
        } else {
          tr.skip(n);
        }
        continue;
      }
      if (status == 0xf0 || status == 0xf7) {
        tr.skip(tr.vlq());
        continue;
      }
      if (status >= 0xf0) throw Error(ErrorCode::MalformedFile, "unexpected system message in track");

      running = status;
      const int kind = status & 0xf0;
      const int channel = status & 0x0f;
      const int data_bytes = (kind == 0xc0 || kind == 0xd0) ? 1 : 2;
      const int d1 = tr.u8() & 0x7f;
      const int d2 = data_bytes == 2 ? (tr.u8() & 0x7f) : 0;

      if (kind == 0x90 && d2 > 0) {
        open[{channel, d1}].emplace_back(tick, d2);
      } else if (kind == 0x80 || (kind == 0x90 && d2 == 0)) {
        auto it = open.find({channel, d1});
        if (it == open.end() || it->second.empty()) continue;
        auto [on_tick, velocity] = it->second.front();
        it->second.pop_front();
        notes.push_back({on_tick, tick, d1, velocity});
      }
    }
    for (auto& [key, pending] : open) {
      for (auto [on_tick, velocity] : pending) {
        logger().warn("note-on without note-off (pitch {}, tick {}); closed at end of track",
                      key.second, on_tick);
        notes.push_back({on_tick, tick, key.second, velocity});
      }
    }
    end_tick = std::max(end_tick, tick);
  }

  const TickClock clock(track.tempo_map, double(std::max(1, track.ticks_per_quarter)), smpte_rate);
  for (const auto& n : notes) {
    if (n.off_tick <= n.on_tick) continue;
    NoteEvent e;
    e.pitch = n.pitch;
    e.onset = clock.seconds(n.on_tick);
    e.offset = clock.seconds(n.off_tick);
    e.velocity = n.velocity;
    track.events.push_back(e);
  }
  track.sort_events();
  track.duration = clock.seconds(end_tick);
  for (const auto& e : track.events) track.duration = std::max(track.duration, e.offset);
  if (track.tempo_map.empty()) track.tempo_map.push_back({0, 500000});
  return track;
}

ScoreTrack read_midi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_midi(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<uint8_t> encode_midi(const ScoreTrack& track) {
  const double ticks_per_second = kWriteTicksPerQuarter * 1e6 / double(kWriteTempo);
  auto to_tick = [&](double sec) { return int64_t(std::llround(std::max(0.0, sec) * ticks_per_second)); };

  struct Message {
    int64_t tick;
    int order;  // note-offs sort before note-ons at the same tick
    int pitch;
    int velocity;
  };
  std::vector<Message> messages;
  messages.reserve(track.events.size() * 2);
  int64_t last_tick = 0;
  for (const auto& e : track.events) {
    const int pitch = std::clamp(e.pitch, 0, 127);
    const int64_t on = to_tick(e.onset);
    const int64_t off = std::max(on + 1, to_tick(e.offset));
    messages.push_back({on, 1, pitch, std::clamp(e.velocity, 1, 127)});
    messages.push_back({off, 0, pitch, 0});
    last_tick = std::max(last_tick, off);
  }
  std::stable_sort(messages.begin(), messages.end(), [](const Message& a, const Message& b) {
    return std::tie(a.tick, a.order, a.pitch) < std::tie(b.tick, b.order, b.pitch);
  });
  last_tick = std::max(last_tick, to_tick(track.duration));

  std::vector<uint8_t> body;
  // Tempo meta event at tick 0.
  put_vlq(body, 0);
  body.insert(body.end(), {0xff, 0x51, 0x03, uint8_t(kWriteTempo >> 16),
                           uint8_t((kWriteTempo >> 8) & 0xff), uint8_t(kWriteTempo & 0xff)});
  int64_t cursor = 0;
  for (const auto& m : messages) {
    put_vlq(body, uint32_t(m.tick - cursor));
    cursor = m.tick;
    if (m.order == 0) {
      body.insert(body.end(), {0x80, uint8_t(m.pitch), 0x40});
    } else {
      body.insert(body.end(), {0x90, uint8_t(m.pitch), uint8_t(m.velocity)});
    }
  }
  put_vlq(body, uint32_t(last_tick - cursor));
  body.insert(body.end(), {0xff, 0x2f, 0x00});

  std::vector<uint8_t> out = {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 0, 0, 1,
                              uint8_t(kWriteTicksPerQuarter >> 8), uint8_t(kWriteTicksPerQuarter & 0xff)};
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_be32(out, uint32_t(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void write_midi(const ScoreTrack& track, const std::filesystem::path& path) {
  const auto bytes = encode_midi(track);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Eigen::MatrixXi sample_roll(const ScoreTrack& track, double hop, Eigen::Index n_frames,
                            int pitch_lo, int pitch_hi) {
  if (!(hop > 0.0)) throw Error(ErrorCode::InvalidArgument, "hop must be positive");
  const Eigen::Index n_pitches = std::max(0, pitch_hi - pitch_lo + 1);
  Eigen::MatrixXi roll = Eigen::MatrixXi::Zero(n_pitches, n_frames);
  for (const auto& e : track.events) {
    if (e.pitch < pitch_lo || e.pitch > pitch_hi) continue;
    // First frame with t * hop >= onset, first frame with t * hop >= offset.
    auto first = Eigen::Index(std::ceil(e.onset / hop - 1e-9));
    auto last = Eigen::Index(std::ceil(e.offset / hop - 1e-9));
    first = std::max<Eigen::Index>(first, 0);
    last = std::min(last, n_frames);
    if (first >= last) {
      logger().warn("event pitch {} [{:.4f}, {:.4f}) falls between frame times", e.pitch,
                     e.onset, e.offset);
      continue;
    }
    roll.row(e.pitch - pitch_lo).segment(first, last - first).setOnes();
  }
  return roll;
}

}  // namespace amt
