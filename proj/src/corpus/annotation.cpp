#include "duriano/corpus/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "duriano/corpus/inventory.hpp"
#include "duriano/util/error.hpp"
#include "duriano/util/key_value.hpp"
#include "duriano/util/rounding.hpp"

namespace duriano::corpus {

std::vector<int> PhraseAnnotation::phoneme_ids() const {
  const auto& inv = PhonemeInventory::standard();
  std::vector<int> ids;
  ids.reserve(intervals.size());
  for (const auto& iv : intervals) ids.push_back(inv.lookup(iv.phoneme));
  return ids;
}

PhraseAnnotation parse_annotation(std::istream& is, const std::string& origin, const std::string& phrase_id) {
  const auto& inv = PhonemeInventory::standard();
  PhraseAnnotation ann;
  ann.phrase_id = phrase_id;
  std::vector<std::pair<PhonemeInterval, std::size_t>> raw;
  std::string line;
  std::size_t lineno = 0;
  bool have_meta = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (t[0] == '#') {
      if (have_meta || t.find('=') == std::string::npos) continue;
      have_meta = true;
      std::istringstream tokens(t.substr(1));
      std::string tok;
      while (tokens >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw InputError(where + "metadata token '" + tok + "' is not key=value");
        const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        if (key == "singer") ann.singer = value;
        else if (key == "role") ann.role_type = value;
        else if (key == "piece") ann.piece = value;
        else if (key == "audio") ann.audio_path = value;
        else throw InputError(where + "unknown metadata key '" + key + "'");
      }
      continue;
    }
    const auto f = split(t, '\t');
    if (f.size() != 3) throw InputError(where + "expected start<TAB>end<TAB>phoneme");
    PhonemeInterval iv;
    try {
      iv.start = std::stod(f[0]);
      iv.end = std::stod(f[1]);
    } catch (const std::exception&) {
      throw InputError(where + "unparsable time");
    }
    iv.phoneme = trim(f[2]);
    if (!inv.find(iv.phoneme)) throw InputError(where + "unknown phoneme '" + iv.phoneme + "'");
    if (!(iv.end > iv.start) || iv.start < 0.0) throw InputError(where + "interval end must exceed start");
    raw.emplace_back(iv, lineno);
  }
  if (raw.empty()) throw InputError(origin + ": no phoneme intervals");
  std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.first.start < b.first.start; });

  constexpr double kTol = 1e-9;
  double cursor = 0.0;
  for (const auto& [iv, ln] : raw) {
    if (iv.start < cursor - kTol)
      throw InputError(origin + ":" + std::to_string(ln) + ": interval overlaps the previous one");
    if (iv.start > cursor + kTol) ann.intervals.push_back({cursor, iv.start, inv.symbol(PhonemeInventory::kSilenceId)});
    PhonemeInterval snapped = iv;
    if (snapped.start <= cursor + kTol) snapped.start = cursor;
    ann.intervals.push_back(snapped);
    cursor = iv.end;
  }
  return ann;
}

PhraseAnnotation load_annotation(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read annotation " + path.string());
  PhraseAnnotation ann = parse_annotation(is, path.string(), path.stem().string());
  if (ann.audio_path.empty())
    ann.audio_path = path.parent_path() / (path.stem().string() + ".wav");
  else if (ann.audio_path.is_relative())
    ann.audio_path = path.parent_path() / ann.audio_path;
  return ann;
}

FrameDurations durations_in_frames(const PhraseAnnotation& annotation, double hop_seconds, int total_frames) {
  if (!(hop_seconds > 0.0)) throw InputError("durations_in_frames: hop must be positive");
  if (total_frames < 1) throw InputError("durations_in_frames: total frame count must be positive");
  if (annotation.intervals.empty()) throw InputError("durations_in_frames: empty annotation");

  FrameDurations out;
  out.phoneme_ids = annotation.phoneme_ids();
  std::vector<double> lengths;
  for (const auto& iv : annotation.intervals) lengths.push_back((iv.end - iv.start) / hop_seconds);

  while (true) {
    out.frames = largest_remainder(lengths, total_frames);
    const auto zero = std::find(out.frames.begin(), out.frames.end(), 0);
    if (zero == out.frames.end()) break;
    const auto i = static_cast<std::size_t>(zero - out.frames.begin());
    std::size_t into;
    if (i == 0) into = 1;
    else if (i + 1 == lengths.size()) into = i - 1;
    else into = lengths[i + 1] > lengths[i - 1] ? i + 1 : i - 1;
    out.warnings.push_back("interval " + std::to_string(i) + " ('" +
                           PhonemeInventory::standard().symbol(out.phoneme_ids[i]) +
                           "') shorter than one frame, merged into interval " + std::to_string(into));
    lengths[into] += lengths[i];
    lengths.erase(lengths.begin() + static_cast<std::ptrdiff_t>(i));
    out.phoneme_ids.erase(out.phoneme_ids.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return out;
}

FrameDurations durations_in_frames(const PhraseAnnotation& annotation, double hop_seconds) {
  const int total = std::max(1, static_cast<int>(std::lround(annotation.duration() / hop_seconds)));
  return durations_in_frames(annotation, hop_seconds, total);
}

}  // namespace duriano::corpus
