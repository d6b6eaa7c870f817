#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "duriano/align/plan.hpp"
#include "duriano/corpus/annotation.hpp"
#include "duriano/dsp/spectrogram.hpp"
#include "duriano/pitch/notes.hpp"

namespace duriano::corpus {

enum class Split { train, validation };

struct ManifestEntry {
  std::string phrase_id;
  Split split = Split::train;
  std::string piece;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<std::string> train() const;
  std::vector<std::string> validation() const;
  void validate() const;  // unique phrase ids
};

struct PhraseRef {
  std::string phrase_id;
  std::string piece;
};

// Every phrase of `holdout_piece` goes to validation, the rest to train.
DatasetManifest split_dataset(const std::vector<PhraseRef>& phrases, const std::string& holdout_piece);
// Without a holdout piece everything is training data.
DatasetManifest split_dataset(const std::vector<PhraseRef>& phrases);

// `phrase_id<TAB>split<TAB>piece_id` lines.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct TrainingExample {
  std::string phrase_id;
  dsp::MelSpectrogram mel;
  dsp::LinearSpectrogram linear;
  align::FrameFeaturePlan plan;
  std::vector<double> f0;  // Hz per frame, 0 unvoiced; drives the f0 baseline

  std::size_t frames() const { return plan.frames(); }
  void validate() const;
};

// Pads (repeating the last value, onsets continuing as sustain) or truncates
// a note sequence by at most `tolerance` frames.
pitch::NoteEventSequence reconcile_events(const pitch::NoteEventSequence& events, std::size_t frames,
                                          std::size_t tolerance = 2);

struct ExampleInputs {
  const PhraseAnnotation& annotation;
  const dsp::AudioBuffer& audio;
  const pitch::NoteEventSequence& note_events;
  int singer_id = 0;
  int role_type_id = 0;
  const std::vector<double>* f0 = nullptr;
};

TrainingExample prepare_training_example(const ExampleInputs& in, const dsp::StftConfig& cfg,
                                         const dsp::MelFilterbank& fb, const dsp::Compression& compression = {});

// Cache layout: <dir>/<id>.mel, <id>.lin, <id>.f0 (DSPC) and <id>.plan.
void save_example(const std::filesystem::path& dir, const TrainingExample& ex);
TrainingExample load_example(const std::filesystem::path& dir, const std::string& phrase_id,
                             const dsp::StftConfig& cfg, const dsp::Compression& compression = {});

}  // namespace duriano::corpus
