#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "duriano/pitch/yin.hpp"

namespace duriano::pitch {

// Note pitches span C2..C6.
inline constexpr int kMinMidi = 36;
inline constexpr int kMaxMidi = 84;
inline constexpr int kSilence = -1;

enum class NoteState { silence = 0, onset = 1, sustain = 2 };

struct NoteEvent {
  int pitch = kSilence;  // MIDI number or kSilence
  NoteState state = NoteState::silence;

  bool voiced() const { return pitch != kSilence; }
  bool operator==(const NoteEvent&) const = default;
};

// One event per spectrogram frame.
struct NoteEventSequence {
  std::vector<NoteEvent> events;
  double hop_seconds = 0.01;

  std::size_t size() const { return events.size(); }
  // Throws InputError if the pitch range or onset pattern is violated.
  void validate() const;
};

struct SegmentOptions {
  double min_duration_seconds = 0.05;
  double sigma = 0.5;                // semitones
  double change_penalty = 4.0;       // any state change
  double voicing_mismatch_cost = 10.0;
};

// Frame-wise Viterbi over {silence} + MIDI 36..84, then merging of runs
// shorter than the minimum duration; voiced runs become onset + sustain.
NoteEventSequence segment_notes(const PitchContour& contour, const SegmentOptions& options = {});

// Builds events from a per-frame pitch labelling (kSilence or MIDI).
NoteEventSequence events_from_labels(const std::vector<int>& labels, double hop_seconds);

// `frame_index<TAB>midi_or_SIL<TAB>state` lines (a fourth column is ignored).
void write_events(std::ostream& os, const NoteEventSequence& seq);
NoteEventSequence read_events(std::istream& is, double hop_seconds);
void save_events(const std::filesystem::path& path, const NoteEventSequence& seq);
NoteEventSequence load_events(const std::filesystem::path& path, double hop_seconds);

const char* state_name(NoteState s);

struct Transcription {
  PitchContour contour;
  NoteEventSequence notes;
};

// extract_f0 followed by segment_notes.
Transcription transcribe(const dsp::AudioBuffer& audio, int hop, double fmin, double fmax);

// `frame<TAB>midi_or_SIL<TAB>state<TAB>f0_hz` lines; read_events accepts it.
void write_transcription(std::ostream& os, const Transcription& tr);
void save_transcription(const std::filesystem::path& path, const Transcription& tr);

// Reads an f0 contour from a transcription file (last column) or from a
// file holding one value in Hz per line.
PitchContour load_f0(const std::filesystem::path& path, double hop_seconds);

}  // namespace duriano::pitch
