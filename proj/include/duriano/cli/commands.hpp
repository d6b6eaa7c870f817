#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace duriano::cli {

namespace fs = std::filesystem;

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

struct PreprocessArgs {
  fs::path corpus;
  fs::path workdir;
};

struct TranscribeArgs {
  fs::path wav;
  fs::path out;
};

struct TrainArgs {
  fs::path workdir;
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

struct SynthArgs {
  fs::path score;     // score file, or an f0 contour in f0 mode
  fs::path phonemes;  // annotation-format phoneme file
  fs::path checkpoint;
  fs::path out;
  std::string mode = "note";
};

struct VocodeArgs {
  fs::path spec;
  fs::path out;
  int iters = 60;
};

struct EvalArgs {
  std::vector<fs::path> wavs;
  std::vector<std::string> labels;
  std::optional<fs::path> out;
};

// Each command throws InputError for bad user input; `log` receives the
// human-readable progress and summary lines.
void cmd_preprocess(const PreprocessArgs& args, std::ostream& log);
void cmd_transcribe(const TranscribeArgs& args, std::ostream& log);
void cmd_train(const TrainArgs& args, std::ostream& log);
void cmd_synth(const SynthArgs& args, std::ostream& log);
void cmd_vocode(const VocodeArgs& args, std::ostream& log);
void cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& log);

// Workdir layout.
fs::path manifest_path(const fs::path& workdir);
fs::path cache_dir(const fs::path& workdir);
fs::path identities_path(const fs::path& workdir);
fs::path checkpoint_dir(const fs::path& workdir);
fs::path train_log_path(const fs::path& workdir);
fs::path checkpoint_path(const fs::path& workdir, std::uint64_t step);
// Highest-step checkpoint in the workdir, if any.
std::optional<fs::path> latest_checkpoint(const fs::path& workdir);

// Parses argv, runs the subcommand and maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace duriano::cli
