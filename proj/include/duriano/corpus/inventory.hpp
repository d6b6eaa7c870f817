#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace duriano::corpus {

// 38 modified X-SAMPA phonemes plus silence. Id 0 is silence.
class PhonemeInventory {
 public:
  static constexpr int kSilenceId = 0;
  static constexpr std::size_t kPhonemeCount = 38;

  static const PhonemeInventory& standard();

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(int id) const;
  std::optional<int> find(const std::string& symbol) const;
  // Throws InputError("unknown phoneme '<symbol>'").
  int lookup(const std::string& symbol) const;
  bool is_consonant(int id) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  PhonemeInventory();
  std::vector<std::string> symbols_;
  std::vector<bool> consonant_;
};

// Initial consonants: consonant phonemes directly followed by a voiced,
// non-silence phoneme.
std::vector<bool> initial_consonant_flags(const std::vector<int>& ids);

// Ordered name <-> id table for singers and role types.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> names);

  int add(const std::string& name);
  int id_of(const std::string& name) const;  // throws InputError if absent
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  // Comma-joined serialization; names may not contain ',', tabs or newlines.
  std::string join() const;
  static Vocabulary parse(const std::string& joined);

 private:
  std::vector<std::string> names_;
};

}  // namespace duriano::corpus
