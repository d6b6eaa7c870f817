#include "duriano/corpus/inventory.hpp"

#include <algorithm>

#include "duriano/util/error.hpp"
#include "duriano/util/key_value.hpp"

namespace duriano::corpus {

PhonemeInventory::PhonemeInventory() {
  // Mandarin initials, glides and finals in the jingju annotation style.
  const std::vector<std::string> consonants = {"p", "p_h", "t", "t_h", "k", "k_h", "m", "n", "f", "x", "s",
                                               "s`", "ts", "ts_h", "ts`", "ts`_h", "ts\\", "ts\\_h", "s\\", "l",
                                               "r\\`"};
  const std::vector<std::string> voiced = {"j", "w", "H", "a", "A", "o", "7", "@", "e", "E",
                                           "i", "u", "y", "1", "@`", "N", "U"};
  symbols_.push_back("sil");
  consonant_.push_back(false);
  for (const auto& s : consonants) {
    symbols_.push_back(s);
    consonant_.push_back(true);
  }
  for (const auto& s : voiced) {
    symbols_.push_back(s);
    consonant_.push_back(false);
  }
}

const PhonemeInventory& PhonemeInventory::standard() {
  static const PhonemeInventory inventory;
  return inventory;
}

const std::string& PhonemeInventory::symbol(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= symbols_.size())
    throw InputError("phoneme id " + std::to_string(id) + " out of range");
  return symbols_[static_cast<std::size_t>(id)];
}

std::optional<int> PhonemeInventory::find(const std::string& symbol) const {
  const auto it = std::find(symbols_.begin(), symbols_.end(), symbol);
  if (it == symbols_.end()) return std::nullopt;
  return static_cast<int>(it - symbols_.begin());
}

int PhonemeInventory::lookup(const std::string& symbol) const {
  if (auto id = find(symbol)) return *id;
  throw InputError("unknown phoneme '" + symbol + "'");
}

bool PhonemeInventory::is_consonant(int id) const {
  symbol(id);
  return consonant_[static_cast<std::size_t>(id)];
}

std::vector<bool> initial_consonant_flags(const std::vector<int>& ids) {
  const auto& inv = PhonemeInventory::standard();
  std::vector<bool> flags(ids.size(), false);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!inv.is_consonant(ids[i])) continue;
    flags[i] = i + 1 < ids.size() && ids[i + 1] != PhonemeInventory::kSilenceId && !inv.is_consonant(ids[i + 1]);
  }
  return flags;
}

Vocabulary::Vocabulary(std::vector<std::string> names) {
  for (const auto& n : names) add(n);
}

int Vocabulary::add(const std::string& name) {
  if (name.empty() || name.find_first_of(",\t\n\r") != std::string::npos)
    throw InputError("invalid vocabulary name '" + name + "'");
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it != names_.end()) return static_cast<int>(it - names_.begin());
  names_.push_back(name);
  return static_cast<int>(names_.size() - 1);
}

int Vocabulary::id_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InputError("unknown vocabulary entry '" + name + "'");
  return static_cast<int>(it - names_.begin());
}

std::string Vocabulary::join() const {
  std::string out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (i) out += ',';
    out += names_[i];
  }
  return out;
}

Vocabulary Vocabulary::parse(const std::string& joined) {
  Vocabulary v;
  if (joined.empty()) return v;
  for (const auto& part : split(joined, ',')) v.add(trim(part));
  return v;
}

}  // namespace duriano::corpus
