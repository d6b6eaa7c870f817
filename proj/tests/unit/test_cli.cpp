#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "duriano/cli/commands.hpp"
#include "duriano/dsp/io.hpp"
#include "duriano/pitch/notes.hpp"
#include "toy_corpus.hpp"

namespace fs = std::filesystem;
using duriano::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "duriano");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

std::vector<std::string> log_columns(const fs::path& log) {
  std::vector<std::string> rows;
  std::istringstream is(slurp(log));
  for (std::string line; std::getline(is, line);) rows.push_back(line.substr(0, line.rfind('\t')));
  return rows;
}

// Scratch directory removed on scope exit.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

// Two toy phrases plus a renamed copy of the first in a second piece.
fs::path write_three_phrase_corpus(const fs::path& root) {
  const fs::path corpus = root / "corpus";
  testsupport::write_toy_corpus(corpus, testsupport::make_toy_corpus());
  const std::string first = testsupport::make_toy_corpus().front().annotation.phrase_id;
  std::string lab = slurp(corpus / (first + ".lab"));
  lab.replace(lab.find("piece=toy_piece"), 15, "piece=other_piece");
  fs::create_directories(corpus / "nested");
  spit(corpus / "nested" / "third.lab", lab);
  fs::copy_file(corpus / (first + ".wav"), corpus / "nested" / "third.wav");
  fs::copy_file(corpus / (first + ".notes"), corpus / "nested" / "third.notes");
  return corpus;
}

const char* kTrainCfg = "model_preset=miniature\nsteps=4\ncheckpoint_every=2\nbatch_size=2\n";

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"bogus"}).code == 2);
  CHECK(invoke({"synth", "--score", "a", "--phonemes", "b", "--checkpoint", "c", "--out", "d", "--mode", "pitch"}).code ==
        2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("preprocess: manifest, idempotence, corrupt annotation") {
  Scratch s("duriano_cli_pre");
  const auto corpus = write_three_phrase_corpus(s.dir);
  const auto work = s.dir / "work";
  const auto r = invoke({"preprocess", "--corpus", corpus.string(), "--workdir", work.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("3 phrases") != std::string::npos);
  const std::string manifest = slurp(duriano::cli::manifest_path(work));
  CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 3);
  CHECK(manifest.find("third\ttrain\tother_piece") != std::string::npos);

  std::vector<std::pair<fs::path, std::string>> before;
  for (const auto& e : fs::directory_iterator(duriano::cli::cache_dir(work))) before.push_back({e.path(), slurp(e.path())});
  REQUIRE(!before.empty());
  REQUIRE(invoke({"preprocess", "--corpus", corpus.string(), "--workdir", work.string()}).code == 0);
  for (const auto& [path, bytes] : before) CHECK(slurp(path) == bytes);
  CHECK(slurp(duriano::cli::manifest_path(work)) == manifest);

  std::ofstream(corpus / "nested" / "third.lab", std::ios::app) << "1.2\t1.4\tzz\n";
  const auto bad = invoke({"preprocess", "--corpus", corpus.string(), "--workdir", work.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("third.lab") != std::string::npos);
  CHECK(bad.err.find("unknown phoneme 'zz'") != std::string::npos);
}

TEST_CASE("train, resume, synth, vocode") {
  Scratch s("duriano_cli_train");
  const auto corpus = s.dir / "corpus";
  testsupport::write_toy_corpus(corpus, testsupport::make_toy_corpus());
  const auto work = s.dir / "work";
  REQUIRE(invoke({"preprocess", "--corpus", corpus.string(), "--workdir", work.string()}).code == 0);
  spit(s.dir / "train.cfg", kTrainCfg);

  auto t = invoke({"train", "--workdir", work.string(), "--config", (s.dir / "train.cfg").string(), "--seed", "5"});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  const auto full = log_columns(duriano::cli::train_log_path(work));
  REQUIRE(full.size() == 5);
  CHECK(fs::exists(duriano::cli::checkpoint_path(work, 2)));
  CHECK(fs::exists(duriano::cli::checkpoint_path(work, 4)));
  CHECK(slurp(work / "train.cfg").find("seed=5") != std::string::npos);

  // Same seed: identical log values.
  REQUIRE(invoke({"train", "--workdir", work.string(), "--config", (s.dir / "train.cfg").string(), "--seed", "5"}).code ==
          0);
  CHECK(log_columns(duriano::cli::train_log_path(work)) == full);

  // Simulate a kill after step 2 and resume.
  fs::remove(duriano::cli::checkpoint_path(work, 4));
  REQUIRE(invoke({"train", "--workdir", work.string(), "--config", (s.dir / "train.cfg").string(), "--seed", "5",
                  "--resume"})
              .code == 0);
  CHECK(log_columns(duriano::cli::train_log_path(work)) == full);

  const auto ck = duriano::cli::latest_checkpoint(work);
  REQUIRE(ck);
  CHECK(*ck == duriano::cli::checkpoint_path(work, 4));

  const auto phrase = testsupport::make_toy_corpus().front().annotation.phrase_id;
  spit(s.dir / "score.txt", "# tempo=0.5\n0\t1\t60\n1\t1\t64\n");
  const auto wav = s.dir / "out.wav";
  auto r = invoke({"synth", "--score", (s.dir / "score.txt").string(), "--phonemes", (corpus / (phrase + ".lab")).string(),
                   "--checkpoint", ck->string(), "--out", wav.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto audio = duriano::dsp::read_wav(wav);
  CHECK(audio.sample_rate == 44100);
  CHECK(std::abs(audio.duration_seconds() - 1.0) <= 0.05);
  CHECK(fs::exists(s.dir / "out.lin"));

  const auto missing = invoke({"synth", "--score", (s.dir / "score.txt").string(), "--phonemes",
                               (corpus / (phrase + ".lab")).string(), "--checkpoint", (s.dir / "none.dian").string(),
                               "--out", wav.string()});
  CHECK(missing.code == 2);

  spit(s.dir / "short.txt", "# tempo=0.1\n0\t1\t60\n");
  const auto gap = invoke({"synth", "--score", (s.dir / "short.txt").string(), "--phonemes",
                           (corpus / (phrase + ".lab")).string(), "--checkpoint", ck->string(), "--out", wav.string()});
  CHECK(gap.code == 2);
  CHECK(gap.err.find("no overlapping score note") != std::string::npos);

  const auto v = invoke({"vocode", "--spec", (s.dir / "out.lin").string(), "--out", (s.dir / "v.wav").string(), "--iters",
                         "3"});
  CHECK_MESSAGE(v.code == 0, v.err);
  CHECK(fs::exists(s.dir / "v.wav"));
}

TEST_CASE("f0-mode training and synthesis") {
  Scratch s("duriano_cli_f0");
  const auto corpus = s.dir / "corpus";
  testsupport::write_toy_corpus(corpus, testsupport::make_toy_corpus());
  const auto work = s.dir / "work";
  REQUIRE(invoke({"preprocess", "--corpus", corpus.string(), "--workdir", work.string()}).code == 0);
  spit(s.dir / "train.cfg", std::string(kTrainCfg) + "mode=f0\nsteps=2\n");
  REQUIRE(invoke({"train", "--workdir", work.string(), "--config", (s.dir / "train.cfg").string()}).code == 0);
  const auto ck = duriano::cli::latest_checkpoint(work);
  REQUIRE(ck);

  const auto phrase = testsupport::make_toy_corpus().front().annotation.phrase_id;
  std::ostringstream f0;
  for (int i = 0; i < 50; ++i) f0 << (i < 5 ? 0.0 : 220.0 + i) << '\n';
  spit(s.dir / "f0.txt", f0.str());
  const auto wav = s.dir / "f0.wav";
  const auto r = invoke({"synth", "--score", (s.dir / "f0.txt").string(), "--phonemes",
                         (corpus / (phrase + ".lab")).string(), "--checkpoint", ck->string(), "--out", wav.string(),
                         "--mode", "f0"});
  CHECK_MESSAGE(r.code == 0, r.err);
  const auto wrong = invoke({"synth", "--score", (s.dir / "f0.txt").string(), "--phonemes",
                             (corpus / (phrase + ".lab")).string(), "--checkpoint", ck->string(), "--out", wav.string()});
  CHECK(wrong.code == 2);
}

TEST_CASE("train without preprocessing hints at preprocess") {
  Scratch s("duriano_cli_empty");
  const auto r = invoke({"train", "--workdir", s.dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("preprocess") != std::string::npos);
}

TEST_CASE("transcribe and eval") {
  Scratch s("duriano_cli_eval");
  auto tone = [](double hz) {
    duriano::dsp::AudioBuffer a;
    a.samples.resize(44100 / 2);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      a.samples[i] = 0.4 * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / 44100.0);
    return a;
  };
  duriano::dsp::write_wav(s.dir / "a.wav", tone(220.0));
  duriano::dsp::write_wav(s.dir / "b.wav", tone(330.0));
  auto glide = tone(220.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < glide.samples.size(); ++i) {
    phase += 2.0 * M_PI * (200.0 + 200.0 * static_cast<double>(i) / glide.samples.size()) / 44100.0;
    glide.samples[i] = 0.4 * std::sin(phase);
  }
  duriano::dsp::write_wav(s.dir / "c.wav", glide);

  const auto tr = invoke({"transcribe", "--wav", (s.dir / "c.wav").string(), "--out", (s.dir / "c.notes").string()});
  REQUIRE_MESSAGE(tr.code == 0, tr.err);
  const auto events = duriano::pitch::load_events(s.dir / "c.notes", 0.01);
  CHECK(events.size() > 40);

  const auto same = invoke({"eval", "--wav", (s.dir / "c.wav").string(), (s.dir / "c.wav").string(), "--labels", "x", "y"});
  REQUIRE_MESSAGE(same.code == 0, same.err);
  CHECK(same.out.find("x\t1.0000\t1.0000") != std::string::npos);

  const auto sines = invoke({"eval", "--wav", (s.dir / "a.wav").string(), (s.dir / "b.wav").string(), "--labels", "low",
                             "high", "--out", (s.dir / "r.tsv").string()});
  REQUIRE_MESSAGE(sines.code == 0, sines.err);
  const std::string fits = slurp(s.dir / "r.tsv");
  CHECK(fits.find("low\t1.0000\t0.0000\n") != std::string::npos);
  CHECK(fits.find("high\t1.0000\t0.0000\n") != std::string::npos);

  const auto three = invoke({"eval", "--wav", (s.dir / "a.wav").string(), (s.dir / "c.wav").string(),
                             (s.dir / "c.wav").string(), "--labels", "one", "two", "three", "--out",
                             (s.dir / "three.tsv").string()});
  REQUIRE_MESSAGE(three.code == 0, three.err);
  const std::string report = slurp(s.dir / "three.tsv");
  CHECK(report.rfind("system\tone\ttwo\tthree\n", 0) == 0);
  CHECK(report.find("\nsystem\tmu\tsigma\n") != std::string::npos);

  const auto missing = invoke({"eval", "--wav", (s.dir / "a.wav").string(), (s.dir / "nope.wav").string(), "--labels",
                               "a", "b"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("nope.wav") != std::string::npos);
}

TEST_CASE("installed executable maps errors to exit codes") {
  const std::string exe = DURIANO_CLI_PATH;
  CHECK(std::system((exe + " --help > /dev/null").c_str()) == 0);
  const int code = std::system((exe + " synth --score x --phonemes y --checkpoint /nonexistent.dian --out z 2>/dev/null").c_str());
  CHECK(WEXITSTATUS(code) == 2);
}
