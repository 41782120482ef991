#include "epimem/facts.hpp"

#include "epimem/error.hpp"
#include "epimem/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <string_view>
#include <unordered_set>

namespace epimem {

using nlohmann::json;

std::vector<FactRecord> parse_facts(std::istream& in) {
  std::vector<FactRecord> facts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "facts line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kFormat, where + e.what());
    }
    if (!j.is_object() || !j.contains("prompt") || !j["prompt"].is_string() ||
        !j.contains("answer") || !j["answer"].is_string()) {
      throw Error(ErrorCode::kFormat, where + "expected string fields prompt and answer");
    }
    FactRecord fact;
    fact.prompt = j["prompt"].get<std::string>();
    fact.answer = normalize_answer(j["answer"].get<std::string>());
    if (fact.prompt.empty()) throw Error(ErrorCode::kFormat, where + "empty prompt");
    if (j.contains("rephrasings")) {
      const auto& r = j["rephrasings"];
      if (!r.is_array()) throw Error(ErrorCode::kFormat, where + "rephrasings must be an array");
      for (const auto& item : r) {
        if (!item.is_string()) throw Error(ErrorCode::kFormat, where + "rephrasings must be strings");
        fact.rephrasings.push_back(item.get<std::string>());
      }
    }
    facts.push_back(std::move(fact));
  }
  return facts;
}

std::vector<FactRecord> load_facts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open facts file " + path.string());
  return parse_facts(in);
}

void write_facts(std::ostream& out, std::span<const FactRecord> facts) {
  for (const auto& f : facts) {
    json j = {{"prompt", f.prompt}, {"answer", f.answer}, {"rephrasings", f.rephrasings}};
    out << j.dump() << '\n';
  }
}

void save_facts(const std::filesystem::path& path, std::span<const FactRecord> facts) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write facts file " + path.string());
  write_facts(out, facts);
}

namespace {

constexpr std::array<std::string_view, 14> kTemplates = {
    "the capital city of {} is",
    "{} was born in the town of",
    "the native language of {} is",
    "{} is a citizen of the country",
    "the head office of {} is located in",
    "{} plays the musical instrument",
    "the creator of {} is",
    "{} works in the field of",
    "the spouse of {} is named",
    "{} speaks the language",
    "{} was founded in the city of",
    "the religion of {} is",
    "the employer of {} is",
    "the genre of {} is",
};

constexpr std::array<std::string_view, 20> kSyllables = {
    "ka", "lo", "mi", "ra", "tu", "ne", "so", "vi", "da", "pe",
    "gu", "zo", "ri", "fa", "ba", "xe", "wu", "qi", "mo", "te",
};

std::string pseudo_word(Rng& rng) {
  std::uniform_int_distribution<int> length(2, 4);
  std::uniform_int_distribution<std::size_t> syllable(0, kSyllables.size() - 1);
  std::string w;
  for (int i = length(rng); i > 0; --i) w += kSyllables[syllable(rng)];
  return w;
}

}  // namespace

std::vector<FactRecord> synthetic_facts(std::size_t count, std::size_t rephrasings,
                                        std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xfac7));
  Rng reph_rng(derive_seed(seed, 0x4e9));
  std::uniform_int_distribution<std::size_t> pick_template(0, kTemplates.size() - 1);
  const Rephraser rephraser;

  std::vector<FactRecord> facts;
  facts.reserve(count);
  std::unordered_set<std::string> prompts;
  while (facts.size() < count) {
    const std::string subject = pseudo_word(rng) + " " + pseudo_word(rng);
    std::string prompt(kTemplates[pick_template(rng)]);
    prompt.replace(prompt.find("{}"), 2, subject);
    if (!prompts.insert(prompt).second) continue;

    // Two words: a single token can share a hash bucket with another answer,
    // which would make two facts that differ only in the answer identical.
    const std::string answer = pseudo_word(rng) + " " + pseudo_word(rng);

    FactRecord fact{prompt, normalize_answer(answer), {}};
    for (std::size_t r = 0; r < rephrasings; ++r) {
      fact.rephrasings.push_back(rephraser.rephrase(prompt, reph_rng));
    }
    facts.push_back(std::move(fact));
  }
  return facts;
}

std::vector<std::string> unique_answers(std::span<const FactRecord> facts) {
  std::set<std::string> set;
  for (const auto& f : facts) set.insert(f.answer);
  return {set.begin(), set.end()};
}

}  // namespace epimem
