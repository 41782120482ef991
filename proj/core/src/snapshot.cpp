#include "epimem/snapshot.hpp"

#include "epimem/error.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace epimem {

void MemorySnapshot::validate() const {
  const auto k = memory.rows();
  const auto c = memory.cols();
  if (k < 1 || c < 1) throw Error(ErrorCode::kShapeMismatch, "snapshot memory is empty");
  if (prior.rows() != k || prior.cols() != c || reference.rows() != k || reference.cols() != c ||
      covariance.rows() != k || covariance.cols() != k) {
    throw Error(ErrorCode::kShapeMismatch, "snapshot matrices disagree on K/C");
  }
  if (encoder.latent_dim != static_cast<std::size_t>(c)) {
    throw Error(ErrorCode::kShapeMismatch, "snapshot encoder latent_dim differs from C");
  }
}

SequentialState MemorySnapshot::to_sequential(const ToleranceConfig& tol) const {
  validate();
  auto ref = std::make_shared<const ReferenceMemory>(reference, tol);
  return SequentialState(memory, covariance, std::move(ref), update_count);
}

MemorySnapshot MemorySnapshot::from_sequential(const SequentialState& state, const Matrix& prior,
                                               const EncoderConfig& encoder, std::string created) {
  MemorySnapshot s;
  s.encoder = encoder;
  s.update_count = state.update_count();
  s.created = std::move(created);
  s.memory = state.memory();
  s.prior = prior;
  s.reference = state.reference().matrix();
  s.covariance = state.covariance();
  s.validate();
  return s;
}

namespace {

void write_matrix(std::ostream& out, std::string_view name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

[[noreturn]] void corrupt(const std::string& what) {
  throw Error(ErrorCode::kFormat, "snapshot: " + what);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next(std::string_view expecting) {
    std::string line;
    if (!std::getline(in_, line)) corrupt("truncated (expected " + std::string(expecting) + ")");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

 private:
  std::istream& in_;
};

template <typename T>
T parse_number(std::string_view token, std::string_view what) {
  T value{};
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) corrupt("bad number '" + std::string(token) + "' in " + std::string(what));
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) parts.push_back(line.substr(start, i - start));
  }
  return parts;
}

// "key value" line; returns value.
std::string_view expect_key(const std::string& line, std::string_view key) {
  if (line.size() <= key.size() || line.compare(0, key.size(), key) != 0 || line[key.size()] != ' ') {
    corrupt("expected '" + std::string(key) + "'");
  }
  return std::string_view(line).substr(key.size() + 1);
}

Matrix read_matrix(LineReader& reader, std::string_view name, Eigen::Index rows, Eigen::Index cols) {
  const std::string header = reader.next("matrix header");
  const auto parts = split(header);
  if (parts.size() != 4 || parts[0] != "matrix" || parts[1] != name) {
    corrupt("expected matrix " + std::string(name));
  }
  const auto r = parse_number<Eigen::Index>(parts[2], name);
  const auto c = parse_number<Eigen::Index>(parts[3], name);
  if (r != rows || c != cols) corrupt("shape corruption in matrix " + std::string(name));

  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string line = reader.next("matrix row");
    const auto values = split(line);
    if (static_cast<Eigen::Index>(values.size()) != cols) {
      corrupt("shape corruption in matrix " + std::string(name) + " row " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = parse_number<double>(values[j], name);
  }
  if (!m.allFinite()) corrupt("non-finite entry in matrix " + std::string(name));
  return m;
}

}  // namespace

void write_snapshot(std::ostream& out, const MemorySnapshot& s) {
  s.validate();
  if (s.created.find('\n') != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot metadata must be a single line");
  }
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016" PRIx64, s.encoder.fingerprint());
  out << "epimem-snapshot\n"
      << "format_version " << s.format_version << '\n'
      << "K " << s.slots() << '\n'
      << "C " << s.latent_dim() << '\n'
      << "encoder hash_dim=" << s.encoder.hash_dim << " latent_dim=" << s.encoder.latent_dim
      << " projection_seed=" << s.encoder.projection_seed
      << " case_fold=" << (s.encoder.case_fold ? 1 : 0) << " fingerprint=" << fp << '\n'
      << "update_count " << s.update_count << '\n'
      << "created " << s.created << '\n';
  write_matrix(out, "M", s.memory);
  write_matrix(out, "M0", s.prior);
  write_matrix(out, "M_ref", s.reference);
  write_matrix(out, "Ckk", s.covariance);
  out << "end\n";
}

MemorySnapshot read_snapshot(std::istream& in, std::optional<SnapshotShape> expected) {
  LineReader reader(in);
  if (reader.next("magic") != "epimem-snapshot") corrupt("not a snapshot file");

  MemorySnapshot s;
  s.format_version = parse_number<int>(expect_key(reader.next("format_version"), "format_version"),
                                       "format_version");
  if (s.format_version != kSnapshotVersion) {
    throw Error(ErrorCode::kFormat, "unsupported snapshot version " + std::to_string(s.format_version));
  }
  const auto k = parse_number<Eigen::Index>(expect_key(reader.next("K"), "K"), "K");
  const auto c = parse_number<Eigen::Index>(expect_key(reader.next("C"), "C"), "C");
  if (k < 1 || c < 1) corrupt("K and C must be positive");
  if (expected && (static_cast<std::size_t>(k) != expected->slots ||
                   static_cast<std::size_t>(c) != expected->latent_dim)) {
    throw Error(ErrorCode::kShapeMismatch,
                "snapshot shape " + std::to_string(k) + "x" + std::to_string(c) +
                    " does not match run shape " + std::to_string(expected->slots) + "x" +
                    std::to_string(expected->latent_dim));
  }

  const std::string enc_line = reader.next("encoder");
  const auto enc_parts = split(expect_key(enc_line, "encoder"));
  std::string fingerprint;
  for (const auto part : enc_parts) {
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) corrupt("bad encoder field");
    const auto key = part.substr(0, eq);
    const auto value = part.substr(eq + 1);
    if (key == "hash_dim") s.encoder.hash_dim = parse_number<std::size_t>(value, key);
    else if (key == "latent_dim") s.encoder.latent_dim = parse_number<std::size_t>(value, key);
    else if (key == "projection_seed") s.encoder.projection_seed = parse_number<std::uint64_t>(value, key);
    else if (key == "case_fold") s.encoder.case_fold = parse_number<int>(value, key) != 0;
    else if (key == "fingerprint") fingerprint = std::string(value);
    else corrupt("unknown encoder field " + std::string(key));
  }
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016" PRIx64, s.encoder.fingerprint());
  if (fingerprint != fp) corrupt("encoder fingerprint mismatch");

  s.update_count =
      parse_number<std::size_t>(expect_key(reader.next("update_count"), "update_count"), "update_count");
  const std::string created = reader.next("created");
  if (created.rfind("created", 0) != 0) corrupt("expected 'created'");
  s.created = created.size() > 8 ? created.substr(8) : std::string();

  s.memory = read_matrix(reader, "M", k, c);
  s.prior = read_matrix(reader, "M0", k, c);
  s.reference = read_matrix(reader, "M_ref", k, c);
  s.covariance = read_matrix(reader, "Ckk", k, k);
  if (reader.next("end") != "end") corrupt("missing end marker");
  s.validate();
  return s;
}

void save_snapshot(const std::filesystem::path& path, const MemorySnapshot& snapshot) {
  std::ostringstream buf;
  write_snapshot(buf, snapshot);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write snapshot " + tmp.string());
    out << buf.str();
    if (!out) throw Error(ErrorCode::kIo, "failed writing snapshot " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

MemorySnapshot load_snapshot(const std::filesystem::path& path, std::optional<SnapshotShape> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open snapshot " + path.string());
  return read_snapshot(in, expected);
}

}  // namespace epimem
