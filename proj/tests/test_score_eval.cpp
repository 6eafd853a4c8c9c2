// Standard MIDI file reading and writing, piano rolls, note matching and metrics.

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "amt/error.hpp"
#include "amt/evaluation.hpp"
#include "amt/score.hpp"
#include "oracles.hpp"

namespace {

amt::NoteEvent note(int pitch, double onset, double offset, int velocity = 100) {
  amt::NoteEvent e;
  e.pitch = pitch;
  e.onset = onset;
  e.offset = offset;
  e.velocity = velocity;
  return e;
}

std::vector<uint8_t> chunk(const char* tag, const std::vector<uint8_t>& body) {
  std::vector<uint8_t> out(tag, tag + 4);
  const auto n = uint32_t(body.size());
  out.insert(out.end(), {uint8_t(n >> 24), uint8_t(n >> 16), uint8_t(n >> 8), uint8_t(n)});
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::vector<uint8_t> smf(uint16_t format, uint16_t division, const std::vector<std::vector<uint8_t>>& tracks) {
  auto out = chunk("MThd", {0, uint8_t(format), 0, uint8_t(tracks.size()), uint8_t(division >> 8),
                            uint8_t(division & 0xff)});
  for (const auto& t : tracks) {
    const auto c = chunk("MTrk", t);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

// Delta 0 note-on C4, delta 96 note-off, 96 ticks per quarter, default tempo.
TEST(Midi, SingleNoteAtDefaultTempo) {
  const auto bytes = smf(0, 96, {{0x00, 0x90, 60, 100, 0x60, 0x80, 60, 0, 0x00, 0xff, 0x2f, 0x00}});
  const auto track = amt::parse_midi(bytes);
  ASSERT_EQ(track.events.size(), 1u);
  EXPECT_EQ(track.events[0].pitch, 60);
  EXPECT_EQ(track.events[0].velocity, 100);
  EXPECT_DOUBLE_EQ(track.events[0].onset, 0.0);
  EXPECT_DOUBLE_EQ(track.events[0].offset, 0.5);
}

// Type 1: tempo track sets 60 BPM after one quarter; the note track uses
// running status and a zero-velocity note-on as note-off.
TEST(Midi, TempoMapRunningStatusAndTracksMerge) {
  const std::vector<uint8_t> tempo = {0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20,  // 500000 us
                                      0x60, 0xff, 0x51, 0x03, 0x0f, 0x42, 0x40,  // 1000000 us at tick 96
                                      0x00, 0xff, 0x2f, 0x00};
  const std::vector<uint8_t> notes = {0x00, 0x91, 64, 90,    // on at 0
                                      0x60, 67, 80,          // running status: on at 96
                                      0x60, 64, 0,           // off at 192
                                      0x30, 0x81, 67, 0,     // off at 240
                                      0x00, 0xff, 0x2f, 0x00};
  const auto track = amt::parse_midi(smf(1, 96, {tempo, notes}));
  ASSERT_EQ(track.events.size(), 2u);
  EXPECT_EQ(track.events[0].pitch, 64);
  EXPECT_DOUBLE_EQ(track.events[0].onset, 0.0);
  EXPECT_DOUBLE_EQ(track.events[0].offset, 1.5);
  EXPECT_EQ(track.events[1].pitch, 67);
  EXPECT_DOUBLE_EQ(track.events[1].onset, 0.5);
  EXPECT_DOUBLE_EQ(track.events[1].offset, 2.0);
}

TEST(Midi, EmptyTrack) {
  const auto track = amt::parse_midi(smf(0, 96, {{0x00, 0xff, 0x2f, 0x00}}));
  EXPECT_TRUE(track.events.empty());
}

TEST(Midi, UnterminatedNoteClosesAtEndOfTrack) {
  const auto track = amt::parse_midi(smf(0, 96, {{0x00, 0x90, 60, 100, 0x81, 0x40, 0xff, 0x2f, 0x00}}));
  ASSERT_EQ(track.events.size(), 1u);
  EXPECT_DOUBLE_EQ(track.events[0].offset, 1.0);
}

TEST(Midi, GarbageIsMalformed) {
  for (const auto& bytes : {std::vector<uint8_t>{}, std::vector<uint8_t>{'R', 'I', 'F', 'F', 0, 0, 0, 0, 1, 2, 3, 4, 5, 6},
                            smf(0, 96, {{0x00, 0x90, 60}})}) {
    try {
      amt::parse_midi(bytes);
      ADD_FAILURE() << "accepted " << bytes.size() << " bytes";
    } catch (const amt::Error& e) {
      EXPECT_EQ(e.code(), amt::ErrorCode::MalformedFile);
    }
  }
}

TEST(Midi, MissingFileIsUnreadable) {
  try {
    amt::read_midi("/nonexistent/x.mid");
    FAIL();
  } catch (const amt::Error& e) {
    EXPECT_EQ(e.code(), amt::ErrorCode::UnreadableFile);
  }
}

TEST(Midi, EmptyTrackWritesValidFile) {
  const auto bytes = amt::encode_midi(amt::ScoreTrack{});
  EXPECT_TRUE(amt::parse_midi(bytes).events.empty());
}

TEST(Midi, SimultaneousNotesSurvive) {
  const auto track = amt::track_from_events({note(60, 1.0, 2.0), note(64, 1.0, 2.0)});
  const auto back = amt::parse_midi(amt::encode_midi(track));
  ASSERT_EQ(back.events.size(), 2u);
  EXPECT_EQ(back.events[0].pitch, 60);
  EXPECT_EQ(back.events[1].pitch, 64);
}

TEST(Midi, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "amt_test_roundtrip.mid";
  const auto track = amt::track_from_events({note(72, 0.25, 0.75, 64)});
  amt::write_midi(track, path);
  const auto back = amt::read_midi(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.events.size(), 1u);
  EXPECT_EQ(back.events[0].velocity, 64);
  EXPECT_NEAR(back.events[0].onset, 0.25, 1.0 / 960.0);
}

void by_pitch(std::vector<amt::NoteEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const amt::NoteEvent& a, const amt::NoteEvent& b) {
    return a.pitch != b.pitch ? a.pitch < b.pitch : a.onset < b.onset;
  });
}

TEST(Midi, RandomTracksRoundTripWithinOneTick) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double tick = 1.0 / 960.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<amt::NoteEvent> events;
    for (int pitch = 0; pitch < 128; pitch += 1 + int(rng() % 20)) {
      double t = 5.0 * u(rng);
      for (int k = 0; k < 3; ++k) {
        const double length = 3 * tick + 2.0 * u(rng);
        events.push_back(note(pitch, t, t + length, 1 + int(rng() % 127)));
        t += length + 3 * tick + u(rng);
      }
    }
    auto track = amt::track_from_events(events);
    auto back = amt::parse_midi(amt::encode_midi(track));
    ASSERT_EQ(back.events.size(), track.events.size());
    // Notes a tick apart may swap places; per pitch the order is fixed.
    by_pitch(track.events);
    by_pitch(back.events);
    for (size_t k = 0; k < back.events.size(); ++k) {
      EXPECT_EQ(back.events[k].pitch, track.events[k].pitch);
      EXPECT_EQ(back.events[k].velocity, track.events[k].velocity);
      EXPECT_LE(std::abs(back.events[k].onset - track.events[k].onset), tick);
      EXPECT_LE(std::abs(back.events[k].offset - track.events[k].offset), tick);
    }
  }
}

TEST(Roll, HalfOpenSampling) {
  const auto roll = amt::sample_roll(amt::track_from_events({note(60, 0.0, 0.03)}), 0.01, 5, 60, 61);
  EXPECT_EQ(roll.row(0), (Eigen::RowVectorXi(5) << 1, 1, 1, 0, 0).finished());
  EXPECT_TRUE(roll.row(1).isZero());
}

TEST(Roll, EmptyAndBetweenFrames) {
  EXPECT_TRUE(amt::sample_roll(amt::ScoreTrack{}, 0.01, 10, 21, 108).isZero());
  EXPECT_TRUE(amt::sample_roll(amt::track_from_events({note(60, 0.012, 0.018)}), 0.01, 10, 21, 108).isZero());
}

TEST(Match, IdentityMatchesEverything) {
  const std::vector<amt::NoteEvent> ref = {note(60, 0.1, 0.5), note(64, 0.1, 0.5), note(60, 1.0, 1.5)};
  EXPECT_EQ(amt::match_notes(ref, ref), (amt::MatchCounts{3, 0, 0}));
}

TEST(Match, LateNoteMisses) {
  const std::vector<amt::NoteEvent> ref = {note(60, 1.0, 1.5)}, est = {note(60, 1.06, 1.5)};
  EXPECT_EQ(amt::match_notes(est, ref), (amt::MatchCounts{0, 1, 1}));
}

TEST(Match, ToleranceBoundaryAtTenMicroseconds) {
  const std::vector<amt::NoteEvent> ref = {note(60, 1.0, 1.5)};
  const std::vector<amt::NoteEvent> in = {note(60, 1.049, 1.5)}, out = {note(60, 1.051, 1.5)};
  EXPECT_EQ(amt::match_notes(in, ref).tp, 1);
  EXPECT_EQ(amt::match_notes(out, ref).tp, 0);
  const std::vector<amt::NoteEvent> edge_in = {note(60, 1.04999, 1.5)}, edge_out = {note(60, 1.05001, 1.5)};
  EXPECT_EQ(amt::match_notes(edge_in, ref).tp, 1);
  EXPECT_EQ(amt::match_notes(edge_out, ref).tp, 0);
}

TEST(Match, EquidistantTieGoesToEarlierReference) {
  const std::vector<amt::NoteEvent> ref = {note(60, 0.0, 0.5), note(60, 0.04, 0.5)};
  const std::vector<amt::NoteEvent> est = {note(60, 0.02, 0.5)};
  EXPECT_EQ(amt::match_notes(est, ref), (amt::MatchCounts{1, 0, 1}));
}

TEST(Match, PitchMustAgreeAndOffsetsAreIgnored) {
  const std::vector<amt::NoteEvent> ref = {note(60, 0.0, 0.5)};
  const std::vector<amt::NoteEvent> est = {note(61, 0.0, 0.5), note(60, 0.01, 3.0)};
  EXPECT_EQ(amt::match_notes(est, ref), (amt::MatchCounts{1, 1, 0}));
}

TEST(Match, PermutationInvariantAndOneExtraNoteAddsAtMostOneMatch) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<amt::NoteEvent> ref, est;
    for (int k = 0; k < 15; ++k) ref.push_back(note(60 + int(rng() % 4), 3.0 * u(rng), 4.0));
    for (int k = 0; k < 15; ++k) est.push_back(note(60 + int(rng() % 4), 3.0 * u(rng), 4.0));
    const auto base = amt::match_notes(est, ref);
    auto shuffled = est;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto shuffled_ref = ref;
    std::shuffle(shuffled_ref.begin(), shuffled_ref.end(), rng);
    EXPECT_EQ(amt::match_notes(shuffled, shuffled_ref), base);

    auto more = est;
    more.push_back(note(60 + int(rng() % 4), 3.0 * u(rng), 4.0));
    const auto c = amt::match_notes(more, ref);
    EXPECT_LE(c.tp, base.tp + 1);
    EXPECT_EQ(c.tp + c.fp, long(more.size()));
    EXPECT_EQ(c.tp + c.fn, long(ref.size()));
  }
}

TEST(Metrics, ExamplesAndDegenerateCases) {
  const auto m = amt::compute_metrics({2, 1, 1});
  EXPECT_DOUBLE_EQ(m.tpr, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.ppv, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f_measure, 2.0 / 3.0);
  const auto e = amt::compute_metrics({0, 0, 0});
  EXPECT_EQ(e.tpr, 1.0);
  EXPECT_EQ(e.ppv, 1.0);
  EXPECT_EQ(e.f_measure, 1.0);
  const auto z = amt::compute_metrics({0, 5, 3});
  EXPECT_EQ(z.tpr, 0.0);
  EXPECT_EQ(z.ppv, 0.0);
  EXPECT_EQ(z.f_measure, 0.0);
}

TEST(Metrics, HarmonicMeanBounds) {
  for (long tp = 0; tp < 12; ++tp) {
    for (long fp = 0; fp < 12; ++fp) {
      for (long fn = 0; fn < 12; ++fn) {
        const auto m = amt::compute_metrics({tp, fp, fn});
        const auto want = oracle::metrics(tp, fp, fn);
        EXPECT_EQ(m.tpr, want.tpr);
        EXPECT_EQ(m.ppv, want.ppv);
        EXPECT_EQ(m.f_measure, want.f);
        EXPECT_LE(m.f_measure, (m.tpr + m.ppv) / 2.0 + 1e-15);
        EXPECT_GE(m.f_measure, std::min(m.tpr, m.ppv) - 1e-15);
      }
    }
  }
}

TEST(Report, PooledSumsCountsBeforeDividing) {
  amt::EvalReport r;
  r.system = "m1";
  r.add("a", {9, 1, 0});
  r.add("b", {0, 0, 10});
  EXPECT_EQ(r.totals, (amt::MatchCounts{9, 1, 10}));
  EXPECT_DOUBLE_EQ(r.pooled.tpr, 9.0 / 19.0);
  EXPECT_DOUBLE_EQ(r.mean.tpr, 0.5);
  const auto j = r.to_json();
  EXPECT_EQ(j["sequences"].size(), 2u);
  const std::vector<amt::EvalReport> reports = {r};
  EXPECT_NE(amt::format_table(reports).find("m1"), std::string::npos);
}

}  // namespace
