#pragma once

#include <Eigen/Dense>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"
#include "opsub/hull.hpp"
#include "opsub/subspace.hpp"

// Container layout shared by every persisted type: one ASCII header line
//   MAGIC field... [LE64]\n
// followed by the payload, either as whitespace-separated decimals (text) or,
// when the header ends in the token LE64, as raw little-endian IEEE-754
// doubles (binary). Counts inside binary payloads are little-endian uint64.
//
//   OPF1 m n K      K records, each m alpha entries then n beta entries
//   OPFAM1 L        L complete OPF1 blocks
//   SSM1 m n I J    E (m x I, column-major), F (n x J), fit, history count, history
//   HUL1 L I J      L vertices (I x J, column-major), then the L x L Gram

namespace opsub {

enum class Encoding { Text, Binary };

/// Malformed or truncated input. `offset` is the byte position where the
/// problem was detected.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class MalformedHeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};

class MalformedPayloadError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  TruncatedError(const std::string& what, std::size_t offset, std::size_t record)
      : FormatError(what + ", record " + std::to_string(record), offset), record_(record) {}
  /// Index of the record (operator, pair, or section) being read.
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

class InconsistencyError : public FormatError {
 public:
  using FormatError::FormatError;
};

class FileError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline constexpr std::string_view kBinaryTag = "LE64";

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("write failed for " + path);
}

inline std::uint64_t to_little(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
  return bits;
}

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

class Writer {
 public:
  explicit Writer(Encoding enc) : enc_(enc) {}

  void header(const std::string& magic, std::initializer_list<std::uint64_t> fields) {
    out_ += magic;
    for (auto f : fields) out_ += " " + std::to_string(f);
    if (enc_ == Encoding::Binary) {
      out_ += ' ';
      out_ += kBinaryTag;
    }
    out_ += '\n';
  }

  void value(double x) {
    if (enc_ == Encoding::Binary) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(x));
      char raw[8];
      std::memcpy(raw, &bits, 8);
      out_.append(raw, 8);
    } else {
      out_ += format_double(x);
      out_ += ' ';
    }
  }

  void count(std::uint64_t c) {
    if (enc_ == Encoding::Binary) {
      const std::uint64_t bits = to_little(c);
      char raw[8];
      std::memcpy(raw, &bits, 8);
      out_.append(raw, 8);
    } else {
      out_ += std::to_string(c);
      out_ += ' ';
    }
  }

  template <class Derived>
  void values(const Eigen::DenseBase<Derived>& block) {
    for (Index j = 0; j < block.cols(); ++j)
      for (Index i = 0; i < block.rows(); ++i) value(block(i, j));
    end_line();
  }

  void end_line() {
    if (enc_ == Encoding::Text && !out_.empty() && out_.back() == ' ') out_.back() = '\n';
  }

  std::string& bytes() { return out_; }

 private:
  Encoding enc_;
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  Encoding encoding() const noexcept { return enc_; }
  bool at_end() const noexcept { return pos_ >= data_.size(); }

  /// Reads the header line, checks the magic and returns its numeric fields.
  std::vector<std::uint64_t> header(std::string_view magic, std::size_t nfields,
                                    std::optional<Encoding> expected = std::nullopt) {
    const std::size_t start = pos_;
    const std::size_t eol = data_.find('\n', pos_);
    if (eol == std::string_view::npos || eol - pos_ > 256)
      throw MalformedHeaderError("missing or overlong header line", start);
    std::istringstream line{std::string(data_.substr(pos_, eol - pos_))};
    pos_ = eol + 1;
    std::vector<std::string> tokens;
    for (std::string t; line >> t;) tokens.push_back(t);
    if (tokens.empty() || tokens.front() != magic)
      throw MalformedHeaderError("expected magic " + std::string(magic), start);
    Encoding enc = Encoding::Text;
    if (tokens.size() == nfields + 2 && tokens.back() == kBinaryTag) {
      enc = Encoding::Binary;
      tokens.pop_back();
    }
    if (tokens.size() != nfields + 1)
      throw MalformedHeaderError(std::string(magic) + " header needs " + std::to_string(nfields) +
                                     " fields",
                                 start);
    if (expected && *expected != enc)
      throw MalformedHeaderError("encoding differs from the enclosing container", start);
    enc_ = enc;
    std::vector<std::uint64_t> fields;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      std::uint64_t v = 0;
      const auto& t = tokens[i];
      auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw MalformedHeaderError("header field '" + t + "' is not a count", start);
      fields.push_back(v);
    }
    return fields;
  }

  double value(std::size_t record) {
    if (enc_ == Encoding::Binary) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, take_raw(record), 8);
      return std::bit_cast<double>(to_little(bits));
    }
    const std::size_t start = skip_space(record);
    double x = 0.0;
    auto res = std::from_chars(data_.data() + pos_, data_.data() + data_.size(), x);
    if (res.ec != std::errc() || (res.ptr < data_.data() + data_.size() && !is_space(*res.ptr)))
      throw MalformedPayloadError("invalid number", start);
    pos_ = static_cast<std::size_t>(res.ptr - data_.data());
    return x;
  }

  std::uint64_t count(std::size_t record) {
    if (enc_ == Encoding::Binary) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, take_raw(record), 8);
      return to_little(bits);
    }
    const std::size_t start = skip_space(record);
    std::uint64_t c = 0;
    auto res = std::from_chars(data_.data() + pos_, data_.data() + data_.size(), c);
    if (res.ec != std::errc() || (res.ptr < data_.data() + data_.size() && !is_space(*res.ptr)))
      throw MalformedPayloadError("invalid count", start);
    pos_ = static_cast<std::size_t>(res.ptr - data_.data());
    return c;
  }

  Matrix block(Index rows, Index cols, std::size_t record) {
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) out(i, j) = value(record);
    return out;
  }

  /// Text payloads end with the last number; the next header starts on a fresh line.
  void end_block() {
    if (enc_ == Encoding::Text)
      while (pos_ < data_.size() && is_space(data_[pos_])) ++pos_;
  }

  void expect_end() {
    end_block();
    if (!at_end()) throw MalformedPayloadError("unexpected trailing data", pos_);
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; }

  const char* take_raw(std::size_t record) {
    if (data_.size() - pos_ < 8) throw TruncatedError("payload ends early", pos_, record);
    const char* p = data_.data() + pos_;
    pos_ += 8;
    return p;
  }

  std::size_t skip_space(std::size_t record) {
    while (pos_ < data_.size() && is_space(data_[pos_])) ++pos_;
    if (pos_ >= data_.size()) throw TruncatedError("payload ends early", pos_, record);
    return pos_;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  Encoding enc_ = Encoding::Text;
};

inline Index checked_dim(std::uint64_t v, std::size_t offset, bool allow_zero = false) {
  if ((!allow_zero && v == 0) || v > (std::uint64_t{1} << 31))
    throw MalformedHeaderError("dimension " + std::to_string(v) + " out of range", offset);
  return static_cast<Index>(v);
}

inline void put_operator(Writer& w, const FactoredOperator& s) {
  w.header("OPF1", {static_cast<std::uint64_t>(s.rows()), static_cast<std::uint64_t>(s.cols()),
                    static_cast<std::uint64_t>(s.rank_bound())});
  for (Index k = 0; k < s.rank_bound(); ++k) {
    for (Index i = 0; i < s.rows(); ++i) w.value(s.alphas()(i, k));
    for (Index i = 0; i < s.cols(); ++i) w.value(s.betas()(i, k));
    w.end_line();
  }
}

/// Reads one OPF1 block. Truncation errors report `record_base + k` for pair k.
inline FactoredOperator get_operator(Reader& r, std::optional<Encoding> expected,
                                     std::size_t record_base = 0) {
  const std::size_t start = r.offset();
  const auto f = r.header("OPF1", 3, expected);
  const Index m = checked_dim(f[0], start);
  const Index n = checked_dim(f[1], start);
  const Index k = checked_dim(f[2], start);
  Matrix a(m, k), b(n, k);
  for (Index j = 0; j < k; ++j) {
    const auto record = record_base + static_cast<std::size_t>(j);
    for (Index i = 0; i < m; ++i) a(i, j) = r.value(record);
    for (Index i = 0; i < n; ++i) b(i, j) = r.value(record);
  }
  r.end_block();
  return FactoredOperator(std::move(a), std::move(b));
}

}  // namespace detail

inline std::string encode_operator(const FactoredOperator& s, Encoding enc) {
  detail::Writer w(enc);
  detail::put_operator(w, s);
  return std::move(w.bytes());
}

inline FactoredOperator decode_operator(std::string_view bytes) {
  detail::Reader r(bytes);
  auto s = detail::get_operator(r, std::nullopt);
  r.expect_end();
  return s;
}

inline std::string encode_family(const Family& family, Encoding enc) {
  detail::Writer w(enc);
  w.header("OPFAM1", {family.size()});
  for (const auto& s : family) detail::put_operator(w, s);
  return std::move(w.bytes());
}

/// Truncation errors inside a family report the operator index as the record.
inline Family decode_family(std::string_view bytes) {
  detail::Reader r(bytes);
  const auto f = r.header("OPFAM1", 1);
  const Encoding enc = r.encoding();
  const std::uint64_t count = f[0];
  if (count == 0) throw MalformedHeaderError("family must hold at least one operator", 0);
  Family family;
  for (std::uint64_t l = 0; l < count; ++l) {
    const std::size_t start = r.offset();
    if (r.at_end())
      throw TruncatedError("family ends before operator", start, static_cast<std::size_t>(l));
    try {
      family.push_back(detail::get_operator(r, enc));
    } catch (const TruncatedError& e) {
      throw TruncatedError("operator " + std::to_string(l) + " is truncated", e.offset(),
                           static_cast<std::size_t>(l));
    }
    const auto& s = family.back();
    if (s.rows() != family.front().rows() || s.cols() != family.front().cols())
      throw InconsistencyError("operator " + std::to_string(l) + " has a different shape", start);
  }
  r.expect_end();
  return family;
}

inline std::string encode_model(const SubspaceModel& model, Encoding enc) {
  detail::Writer w(enc);
  w.header("SSM1", {static_cast<std::uint64_t>(model.rows()), static_cast<std::uint64_t>(model.cols()),
                    static_cast<std::uint64_t>(model.rank_out()),
                    static_cast<std::uint64_t>(model.rank_in())});
  w.values(model.E.vectors());
  w.values(model.F.vectors());
  w.value(model.fit);
  w.count(model.history.size());
  for (double h : model.history) w.value(h);
  w.end_line();
  return std::move(w.bytes());
}

/// Records: 0 = E, 1 = F, 2 = fit and history.
inline SubspaceModel decode_model(std::string_view bytes) {
  detail::Reader r(bytes);
  const auto f = r.header("SSM1", 4);
  const Index m = detail::checked_dim(f[0], 0);
  const Index n = detail::checked_dim(f[1], 0);
  const Index ri = detail::checked_dim(f[2], 0, true);
  const Index rj = detail::checked_dim(f[3], 0, true);
  if (ri > m || rj > n) throw InconsistencyError("basis larger than its ambient dimension", 0);
  const std::size_t e_at = r.offset();
  Matrix e = r.block(m, ri, 0);
  const std::size_t f_at = r.offset();
  Matrix fb = r.block(n, rj, 1);
  SubspaceModel model;
  try {
    model.E = OrthoBasis(std::move(e), Mode::Output);
  } catch (const Error&) {
    throw InconsistencyError("E is not orthonormal", e_at);
  }
  try {
    model.F = OrthoBasis(std::move(fb), Mode::Input);
  } catch (const Error&) {
    throw InconsistencyError("F is not orthonormal", f_at);
  }
  model.fit = r.value(2);
  const std::size_t count_at = r.offset();
  const std::uint64_t count = r.count(2);
  if (count > (bytes.size() - r.offset()))
    throw TruncatedError("history longer than the remaining payload", count_at, 2);
  model.history.resize(static_cast<std::size_t>(count));
  for (auto& h : model.history) h = r.value(2);
  r.expect_end();
  return model;
}

inline std::string encode_hull(const HullModel& hull, Encoding enc) {
  detail::Writer w(enc);
  w.header("HUL1", {static_cast<std::uint64_t>(hull.size()),
                    static_cast<std::uint64_t>(hull.rank_out()),
                    static_cast<std::uint64_t>(hull.rank_in())});
  for (const auto& v : hull.vertices) w.values(v.gamma);
  w.values(hull.gram);
  return std::move(w.bytes());
}

/// Records: vertex index, then L for the Gram. The stored Gram must agree
/// with the vertices to 1e-10 relative; the subspace model is attached by the
/// caller since it lives in its own file.
inline HullModel decode_hull(std::string_view bytes, std::optional<SubspaceModel> model = std::nullopt) {
  detail::Reader r(bytes);
  const auto f = r.header("HUL1", 3);
  const Index count = detail::checked_dim(f[0], 0);
  const Index ri = detail::checked_dim(f[1], 0, true);
  const Index rj = detail::checked_dim(f[2], 0, true);
  HullModel hull;
  for (Index l = 0; l < count; ++l)
    hull.vertices.push_back({r.block(ri, rj, static_cast<std::size_t>(l)), static_cast<std::size_t>(l)});
  const std::size_t gram_at = r.offset();
  hull.gram = r.block(count, count, static_cast<std::size_t>(count));
  r.expect_end();
  const Matrix v = hull.stacked();
  const Matrix check = v.transpose() * v;
  const double scale = std::max(1.0, check.cwiseAbs().maxCoeff());
  if ((check - hull.gram).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InconsistencyError("Gram matrix does not match the vertices", gram_at);
  if (model && (model->rank_out() != ri || model->rank_in() != rj))
    throw InconsistencyError("hull ranks do not match the subspace model", 0);
  hull.model = std::move(model);
  hull.lipschitz = detail::largest_eigenvalue_psd(hull.gram);
  return hull;
}

inline void write_family(const std::string& path, const Family& family, Encoding enc = Encoding::Binary) {
  detail::write_file(path, encode_family(family, enc));
}

inline Family read_family(const std::string& path) { return decode_family(detail::read_file(path)); }

inline void write_operator(const std::string& path, const FactoredOperator& s,
                           Encoding enc = Encoding::Binary) {
  detail::write_file(path, encode_operator(s, enc));
}

inline FactoredOperator read_operator(const std::string& path) {
  return decode_operator(detail::read_file(path));
}

/// Reads either a single OPF1 operator or an OPFAM1 family.
inline Family read_operators(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  if (bytes.rfind("OPFAM1", 0) == 0) return decode_family(bytes);
  return {decode_operator(bytes)};
}

inline void write_model(const std::string& path, const SubspaceModel& model,
                        Encoding enc = Encoding::Binary) {
  detail::write_file(path, encode_model(model, enc));
}

inline SubspaceModel read_model(const std::string& path) { return decode_model(detail::read_file(path)); }

inline void write_hull(const std::string& path, const HullModel& hull, Encoding enc = Encoding::Binary) {
  detail::write_file(path, encode_hull(hull, enc));
}

inline HullModel read_hull(const std::string& path, std::optional<SubspaceModel> model = std::nullopt) {
  return decode_hull(detail::read_file(path), std::move(model));
}

/// One point of an approximation-error or timing curve.
struct ExperimentRecord {
  std::string method;  // DCT, SVD, HOSVD or ALS
  Index n = 0;         // ambient dimension
  Index dimension = 0; // |I| (= |J|)
  double value = 0.0;  // relative error or seconds
};

inline std::string encode_csv(const std::vector<ExperimentRecord>& records) {
  std::string out = "method,n,dimension,value\n";
  for (const auto& r : records)
    out += r.method + "," + std::to_string(r.n) + "," + std::to_string(r.dimension) + "," +
           detail::format_double(r.value) + "\n";
  return out;
}

inline void write_csv(const std::string& path, const std::vector<ExperimentRecord>& records) {
  detail::write_file(path, encode_csv(records));
}

}  // namespace opsub
