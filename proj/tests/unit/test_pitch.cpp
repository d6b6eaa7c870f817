#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "duriano/pitch/notes.hpp"
#include "duriano/pitch/yin.hpp"
#include "duriano/util/error.hpp"
#include "duriano/util/rng.hpp"

using namespace duriano;
using namespace duriano::pitch;

namespace {

dsp::AudioBuffer tone(const std::vector<std::pair<double, double>>& segments, int sr = 44100) {
  dsp::AudioBuffer a;
  a.sample_rate = sr;
  double phase = 0.0;
  for (const auto& [hz, seconds] : segments) {
    const auto n = static_cast<std::size_t>(seconds * sr);
    for (std::size_t i = 0; i < n; ++i) {
      phase += 2.0 * M_PI * hz / sr;
      a.samples.push_back(0.5 * std::sin(phase));
    }
  }
  return a;
}

double median_voiced(const PitchContour& c) {
  std::vector<double> v;
  for (double f : c.f0)
    if (f > 0) v.push_back(f);
  std::sort(v.begin(), v.end());
  return v.empty() ? 0.0 : v[v.size() / 2];
}

PitchContour step_contour(const std::vector<std::pair<int, int>>& runs) {
  PitchContour c;
  for (const auto& [midi, frames] : runs)
    for (int i = 0; i < frames; ++i) c.f0.push_back(midi == kSilence ? 0.0 : midi_to_hz(midi));
  return c;
}

// Onset exactly once per voiced run, at its first frame.
void check_state_pattern(const NoteEventSequence& seq) {
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const auto& e = seq.events[t];
    CHECK((e.state == NoteState::silence) == !e.voiced());
    if (!e.voiced()) continue;
    CHECK(e.pitch >= kMinMidi);
    CHECK(e.pitch <= kMaxMidi);
    const bool starts = t == 0 || seq.events[t - 1].pitch != e.pitch;
    CHECK((e.state == NoteState::onset) == starts);
  }
}

}  // namespace

TEST_CASE("hz_to_midi anchors") {
  CHECK(hz_to_midi(440.0) == doctest::Approx(69.0));
  CHECK(hz_to_midi(261.6256) == doctest::Approx(60.0).epsilon(1e-5));
  CHECK(hz_to_midi(880.0) == doctest::Approx(81.0));
  CHECK(midi_to_hz(hz_to_midi(123.4)) == doctest::Approx(123.4));
  CHECK_THROWS_AS(hz_to_midi(0.0), InputError);
  CHECK_THROWS_AS(hz_to_midi(-5.0), InputError);
}

TEST_CASE("440 Hz sine tracks within 1 Hz") {
  const auto c = extract_f0(tone({{440.0, 1.0}}), 441, 65.0, 1050.0);
  CHECK(c.size() == 101);
  CHECK(median_voiced(c) == doctest::Approx(440.0).epsilon(1.0 / 440.0));
  CHECK(c.voiced_count() > 90);
}

TEST_CASE("digital silence is unvoiced") {
  dsp::AudioBuffer a;
  a.samples.assign(44100, 0.0);
  const auto c = extract_f0(a, 441, 65.0, 1050.0);
  CHECK(c.voiced_count() == 0);
}

TEST_CASE("octave step is tracked as a step") {
  const auto c = extract_f0(tone({{440.0, 0.5}, {880.0, 0.5}}), 441, 65.0, 1050.0);
  std::size_t off = 0;
  for (std::size_t t = 2; t + 2 < c.size(); ++t) {
    const double expect = t * 441 < 22050 ? 440.0 : 880.0;
    if (std::abs(c.f0[t] - expect) > expect * 0.02) ++off;
  }
  CHECK(off <= 3);
}

TEST_CASE("extract_f0 argument checks and determinism") {
  const auto a = tone({{300.0, 0.3}});
  CHECK_THROWS_AS(extract_f0(a, 441, 500.0, 100.0), InputError);
  CHECK_THROWS_AS(extract_f0(a, 0, 65.0, 1050.0), InputError);
  CHECK_THROWS_AS(extract_f0(tone({{300.0, 0.005}}), 441, 65.0, 1050.0), InputError);
  CHECK(extract_f0(a, 441, 65.0, 1050.0).f0 == extract_f0(a, 441, 65.0, 1050.0).f0);
}

TEST_CASE("segment_notes on a two-note step") {
  const auto seq = segment_notes(step_contour({{60, 100}, {62, 100}}));
  REQUIRE(seq.size() == 200);
  CHECK(seq.events[0] == NoteEvent{60, NoteState::onset});
  CHECK(seq.events[99] == NoteEvent{60, NoteState::sustain});
  CHECK(seq.events[100] == NoteEvent{62, NoteState::onset});
  CHECK(seq.events[199] == NoteEvent{62, NoteState::sustain});
  const auto onsets = std::count_if(seq.events.begin(), seq.events.end(),
                                    [](const NoteEvent& e) { return e.state == NoteState::onset; });
  CHECK(onsets == 2);
}

TEST_CASE("all-unvoiced contour gives silence") {
  const auto seq = segment_notes(step_contour({{kSilence, 40}}));
  CHECK(std::all_of(seq.events.begin(), seq.events.end(), [](const NoteEvent& e) { return !e.voiced(); }));
}

TEST_CASE("short octave glitch is merged") {
  auto c = step_contour({{60, 30}, {72, 2}, {60, 30}});
  SegmentOptions opt;
  opt.min_duration_seconds = 0.05;
  const auto seq = segment_notes(c, opt);
  CHECK(std::all_of(seq.events.begin(), seq.events.end(), [](const NoteEvent& e) { return e.pitch == 60; }));
  CHECK(seq.events[0].state == NoteState::onset);
  CHECK(std::count_if(seq.events.begin(), seq.events.end(),
                      [](const NoteEvent& e) { return e.state == NoteState::onset; }) == 1);
}

TEST_CASE("property: random contours always yield valid state patterns") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    PitchContour c;
    const std::size_t n = 1 + rng.below(300);
    for (std::size_t t = 0; t < n; ++t) c.f0.push_back(rng.uniform() < 0.3 ? 0.0 : rng.uniform(40.0, 1500.0));
    const auto seq = segment_notes(c);
    CHECK(seq.size() == n);
    check_state_pattern(seq);
    CHECK_NOTHROW(seq.validate());
  }
}

TEST_CASE("property: on-grid step contours are recovered exactly") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<int, int>> runs;
    int prev = -100;
    for (int k = 0; k < 4; ++k) {
      int midi = static_cast<int>(kMinMidi + rng.below(kMaxMidi - kMinMidi + 1));
      if (midi == prev) midi = midi == kMaxMidi ? midi - 1 : midi + 1;
      runs.push_back({midi, 10 + static_cast<int>(rng.below(30))});
      prev = midi;
    }
    const auto seq = segment_notes(step_contour(runs));
    std::size_t t = 0;
    for (const auto& [midi, frames] : runs)
      for (int i = 0; i < frames; ++i, ++t) {
        CHECK(seq.events[t].pitch == midi);
        CHECK(seq.events[t].state == (i == 0 ? NoteState::onset : NoteState::sustain));
      }
  }
}

TEST_CASE("events text round trip and validation") {
  const auto seq = events_from_labels({kSilence, 60, 60, 62, kSilence, 62}, 0.01);
  CHECK(seq.events[1].state == NoteState::onset);
  CHECK(seq.events[2].state == NoteState::sustain);
  CHECK(seq.events[3].state == NoteState::onset);
  CHECK(seq.events[5].state == NoteState::onset);
  std::stringstream ss;
  write_events(ss, seq);
  CHECK(ss.str().rfind("0\tSIL\tsilence\n1\t60\tonset\n", 0) == 0);
  CHECK(read_events(ss, 0.01).events == seq.events);

  NoteEventSequence bad;
  bad.events = {{60, NoteState::sustain}};
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad.events = {{90, NoteState::onset}};
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("transcription output is readable as events and as f0") {
  Transcription tr;
  tr.contour = step_contour({{kSilence, 3}, {64, 20}});
  tr.notes = segment_notes(tr.contour);
  std::stringstream ss;
  write_transcription(ss, tr);
  CHECK(read_events(ss, 0.01).events == tr.notes.events);
}
