#include "editfx/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include "editfx/util.hpp"

namespace editfx {

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<std::string> tokens, std::vector<double> values)
    : dim_(dim), tokens_(std::move(tokens)), values_(std::move(values)) {
  if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
  if (tokens_.empty()) throw InvalidArgument("embedding vocabulary is empty");
  if (values_.size() != dim_ * tokens_.size()) throw InvalidArgument("embedding values do not match dim x vocab");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    // First occurrence wins, like most word-vector readers.
    index_.emplace(tokens_[i], i);
  }
}

std::span<const double> EmbeddingTable::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return {};
  return {values_.data() + it->second * dim_, dim_};
}

std::string EmbeddingTable::to_text() const {
  std::string out = std::to_string(tokens_.size()) + " " + std::to_string(dim_) + "\n";
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    for (std::size_t j = 0; j < dim_; ++j) {
      out += ' ';
      out += format_double(values_[i * dim_ + j]);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

EmbeddingTable parse_table(std::string_view content) {
  std::vector<std::string> tokens;
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2) {
      std::size_t count = 0, d = 0;
      auto r1 = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), count);
      auto r2 = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), d);
      if (r1.ec == std::errc{} && r2.ec == std::errc{} && r1.ptr == fields[0].data() + fields[0].size() &&
          r2.ptr == fields[1].data() + fields[1].size()) {
        if (d == 0) throw DataError("embedding header declares zero dimension");
        (void)count;
        dim = d;
        continue;
      }
    }
    const std::size_t found = fields.size() - 1;
    if (dim == 0) {
      if (found == 0) throw DataError("embedding line " + std::to_string(line_no) + " has no vector values");
      dim = found;
    }
    if (found != dim) {
      throw DataError("embedding line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " values, found " + std::to_string(found));
    }
    tokens.emplace_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw DataError("embedding line " + std::to_string(line_no) + ": bad number '" + std::string(fields[j]) + "'");
      }
      values.push_back(v);
    }
  }
  if (tokens.empty()) throw DataError("embedding file contains no vectors");
  return EmbeddingTable(dim, std::move(tokens), std::move(values));
}

EmbeddingTable load_table(const std::filesystem::path& path) { return parse_table(read_file(path)); }

std::vector<std::string> tokenize(std::string_view text) {
  icu::UnicodeString lowered = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  lowered.toLower(icu::Locale::getRoot());
  std::vector<std::string> tokens;
  icu::UnicodeString current;
  bool has_alnum = false;
  auto flush = [&] {
    if (!current.isEmpty() && has_alnum) {
      std::string s;
      current.toUTF8String(s);
      tokens.push_back(std::move(s));
    }
    current.remove();
    has_alnum = false;
  };
  for (int32_t i = 0; i < lowered.length();) {
    UChar32 c = lowered.char32At(i);
    i += U16_LENGTH(c);
    const bool ascii_punct = c < 0x80 && u_ispunct(c);
    const bool ascii_symbol = c < 0x80 && !u_isalnum(c) && !u_isspace(c) && c > 0x20 && c != 0x7F;
    if (u_isUWhiteSpace(c) || ascii_punct || ascii_symbol || c < 0x20) {
      flush();
      continue;
    }
    if (u_isalnum(c)) has_alnum = true;
    current.append(c);
  }
  flush();
  return tokens;
}

DocVector embed_text(const EmbeddingTable& table, std::string_view text) {
  DocVector doc;
  doc.values.assign(table.dim(), 0.0);
  for (const auto& token : tokenize(text)) {
    auto vec = table.lookup(token);
    if (vec.empty()) continue;
    for (std::size_t j = 0; j < vec.size(); ++j) doc.values[j] += vec[j];
    ++doc.token_hits;
  }
  if (doc.token_hits > 0) {
    const double inv = 1.0 / static_cast<double>(doc.token_hits);
    for (auto& v : doc.values) v *= inv;
  }
  return doc;
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InvalidArgument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  double c = uv / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

double cosine(const DocVector& u, const DocVector& v) { return cosine(u.values, v.values); }

void normalize_l2(std::span<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  if (n == 0.0) return;
  n = 1.0 / std::sqrt(n);
  for (auto& x : v) x *= n;
}

}  // namespace editfx
