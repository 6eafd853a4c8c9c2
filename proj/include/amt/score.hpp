#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace amt {

// A pitched interval [onset, offset) in seconds.
struct NoteEvent {
  int pitch = 0;
  double onset = 0.0;
  double offset = 0.0;
  // Assigned by post-processing; absent for plain segmentation output.
  std::optional<double> likelihood;
  int velocity = 100;

  double duration() const { return offset - onset; }
};

struct TempoChange {
  int64_t tick = 0;
  int64_t us_per_quarter = 500000;
};

struct ScoreTrack {
  std::vector<NoteEvent> events;
  int ticks_per_quarter = 480;
  std::vector<TempoChange> tempo_map;
  // Time of the end-of-track event, seconds. Never earlier than the last offset.
  double duration = 0.0;

  void sort_events();
};

// Parses SMF type 0 or 1. Channels and tracks are merged. A note-on with
// velocity 0 is a note-off; unmatched note-ons are closed at end of track.
ScoreTrack read_midi(const std::filesystem::path& path);
ScoreTrack parse_midi(const std::vector<uint8_t>& bytes);

// Writes SMF type 0, 480 ticks per quarter, one 120 BPM tempo event.
void write_midi(const ScoreTrack& track, const std::filesystem::path& path);
std::vector<uint8_t> encode_midi(const ScoreTrack& track);

// Binary piano roll, rows = pitch_lo..pitch_hi, columns = frames. Cell (i, t)
// is 1 iff an event of that pitch satisfies onset <= t * hop < offset.
Eigen::MatrixXi sample_roll(const ScoreTrack& track, double hop, Eigen::Index n_frames,
                            int pitch_lo, int pitch_hi);

ScoreTrack track_from_events(std::vector<NoteEvent> events, double duration = 0.0);

}  // namespace amt
