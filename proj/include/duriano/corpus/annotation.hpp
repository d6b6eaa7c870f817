#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace duriano::corpus {

struct PhonemeInterval {
  double start = 0.0;
  double end = 0.0;
  std::string phoneme;
};

// One annotated phrase: contiguous phoneme intervals plus singing identity.
struct PhraseAnnotation {
  std::string phrase_id;
  std::filesystem::path audio_path;
  std::vector<PhonemeInterval> intervals;
  std::string singer = "unknown";
  std::string role_type = "unknown";
  std::string piece = "unknown";

  double duration() const { return intervals.empty() ? 0.0 : intervals.back().end; }
  std::vector<int> phoneme_ids() const;
};

// Text format:
//   # singer=<name> role=<name> piece=<name> audio=<file.wav>
//   <start><TAB><end><TAB><phoneme>
// Gaps (including one before the first interval) are filled with `sil`.
// The audio path defaults to the annotation's stem with a .wav extension.
PhraseAnnotation parse_annotation(std::istream& is, const std::string& origin, const std::string& phrase_id);
PhraseAnnotation load_annotation(const std::filesystem::path& path);

struct FrameDurations {
  std::vector<int> phoneme_ids;
  std::vector<int> frames;
  std::vector<std::string> warnings;  // one per interval merged into a neighbor
};

// Quantizes interval lengths to frames with largest-remainder rounding so the
// counts sum to `total_frames`; intervals that would get zero frames are
// merged into their longer neighbor.
FrameDurations durations_in_frames(const PhraseAnnotation& annotation, double hop_seconds, int total_frames);
// Uses round(duration / hop) as the total.
FrameDurations durations_in_frames(const PhraseAnnotation& annotation, double hop_seconds);

}  // namespace duriano::corpus
