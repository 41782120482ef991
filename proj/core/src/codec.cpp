#include "epimem/codec.hpp"

#include "epimem/error.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace epimem {

std::string normalize_answer(std::string_view answer) {
  const auto first = answer.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return std::string(".");
  const auto last = answer.find_last_not_of(" \t\r\n");
  std::string out(answer.substr(first, last - first + 1));
  if (out.back() != '.') out.push_back('.');
  return out;
}

void EncoderConfig::validate() const {
  if (latent_dim < 2 || hash_dim < latent_dim) {
    throw Error(ErrorCode::kInvalidArgument, "encoder needs hash_dim >= latent_dim >= 2");
  }
}

std::uint64_t EncoderConfig::fingerprint() const {
  std::ostringstream desc;
  desc << "encoder/v" << kEncoderVersion << "/fnv1a64/" << hash_dim << '/' << latent_dim << '/'
       << projection_seed << '/' << (case_fold ? 1 : 0);
  return fnv1a64(desc.str());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text, bool case_fold) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                      (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      if (case_fold && c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
      current.push_back(static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Encoder::Encoder(EncoderConfig config) : config_(config) { config_.validate(); }

namespace {

// splitmix64 step; the projection row of a bucket is the sign bits of this stream.
std::uint64_t next_bits(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Vector Encoder::encode(std::string_view text) const {
  const auto c = static_cast<Eigen::Index>(config_.latent_dim);
  Vector out = Vector::Zero(c);

  std::map<std::uint64_t, double> counts;  // ordered: fixed summation order
  for (const auto& token : tokenize(text, config_.case_fold)) {
    counts[fnv1a64(token) % config_.hash_dim] += 1.0;
  }
  if (counts.empty()) return out;

  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  for (const auto& [bucket, count] : counts) {
    std::uint64_t state = derive_seed(config_.projection_seed, bucket);
    std::uint64_t bits = 0;
    for (Eigen::Index j = 0; j < c; ++j) {
      if (j % 64 == 0) bits = next_bits(state);
      const double sign = (bits >> (j % 64)) & 1U ? scale : -scale;
      out(j) += count * sign;
    }
  }
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;
  return out;
}

Vector Encoder::encode_fact(const FactRecord& fact) const {
  return encode_fact(fact.prompt, fact.answer);
}

Vector Encoder::encode_fact(std::string_view prompt, std::string_view answer) const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "fact prompt must be non-empty");
  std::string joined(prompt);
  joined.push_back(' ');
  joined.append(answer);
  return encode(joined);
}

Matrix Encoder::encode_rows(std::span<const std::string> texts) const {
  Matrix rows(static_cast<Eigen::Index>(texts.size()), latent_dim());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = encode(texts[i]).transpose();
  }
  return rows;
}

CandidateVocabulary prompt_conditioned_vocabulary(const Encoder& encoder, std::string_view prompt,
                                                  std::span<const std::string> answers) {
  CandidateVocabulary vocab;
  vocab.answers.assign(answers.begin(), answers.end());
  vocab.encodings.resize(static_cast<Eigen::Index>(answers.size()), encoder.latent_dim());
  for (std::size_t i = 0; i < answers.size(); ++i) {
    vocab.encodings.row(static_cast<Eigen::Index>(i)) =
        encoder.encode_fact(prompt, answers[i]).transpose();
  }
  return vocab;
}

Decoded decode_retrieve(const CandidateVocabulary& vocab, const Vector& z_read) {
  if (vocab.answers.empty()) throw Error(ErrorCode::kInvalidArgument, "empty vocabulary");
  if (vocab.encodings.rows() != static_cast<Eigen::Index>(vocab.answers.size()) ||
      vocab.encodings.cols() != z_read.size()) {
    throw Error(ErrorCode::kShapeMismatch, "vocabulary / readout shape mismatch");
  }
  const double z_norm = z_read.norm();
  if (!(z_norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "empty readout");

  Decoded best;
  double best_score = -2.0;
  for (Eigen::Index i = 0; i < vocab.encodings.rows(); ++i) {
    const double e_norm = vocab.encodings.row(i).norm();
    const double score =
        e_norm > 0.0 ? vocab.encodings.row(i).dot(z_read.transpose()) / (e_norm * z_norm) : 0.0;
    if (score > best_score) {
      best_score = score;
      best.index = static_cast<std::size_t>(i);
    }
  }
  best.score = best_score;
  best.answer = vocab.answers[best.index];
  return best;
}

Rephraser::Rephraser() : Rephraser(Options{}) {}

Rephraser::Rephraser(Options options) : options_(options) {}

const std::unordered_map<std::string, std::vector<std::string>>& Rephraser::synonym_table() {
  static const std::unordered_map<std::string, std::vector<std::string>> table = {
      {"capital", {"chief", "main"}},
      {"city", {"town", "metropolis"}},
      {"town", {"city", "village"}},
      {"born", {"raised", "birthed"}},
      {"native", {"mother", "first"}},
      {"language", {"tongue", "idiom"}},
      {"citizen", {"national", "subject"}},
      {"country", {"nation", "state"}},
      {"head", {"main", "central"}},
      {"office", {"bureau", "headquarters"}},
      {"located", {"situated", "based"}},
      {"plays", {"performs", "uses"}},
      {"musical", {"music"}},
      {"instrument", {"device"}},
      {"creator", {"author", "maker"}},
      {"works", {"labors", "operates"}},
      {"field", {"area", "domain"}},
      {"spouse", {"partner", "wife"}},
      {"named", {"called"}},
      {"speaks", {"talks", "uses"}},
      {"founded", {"established", "created"}},
      {"religion", {"faith", "belief"}},
      {"employer", {"company", "firm"}},
      {"genre", {"style", "kind"}},
  };
  return table;
}

std::string Rephraser::rephrase(std::string_view text, Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::istringstream in{std::string(text)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(std::move(w));

  std::vector<std::string> kept;
  for (const auto& word : words) {
    if (unit(rng) < options_.dropout) continue;
    std::string lower;
    for (char ch : word) {
      lower.push_back(static_cast<char>((ch >= 'A' && ch <= 'Z') ? ch - 'A' + 'a' : ch));
    }
    const auto& table = synonym_table();
    const auto it = table.find(lower);
    if (it != table.end() && unit(rng) < options_.synonym_probability) {
      std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
      kept.push_back(it->second[pick(rng)]);
    } else {
      kept.push_back(word);
    }
  }
  if (kept.empty() && !words.empty()) kept.push_back(words.front());

  std::string out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (i) out.push_back(' ');
    out += kept[i];
  }
  return out;
}

}  // namespace epimem
