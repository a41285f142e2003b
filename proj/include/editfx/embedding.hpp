#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace editfx {

/// Token -> dense vector map read from the plain-text word-vector format
/// (optional "<count> <dim>" header, then "token v1 ... vdim" per line).
/// Lookups are exact; the tokenizer lowercases before lookup.
class EmbeddingTable {
public:
  EmbeddingTable(std::size_t dim, std::vector<std::string> tokens, std::vector<double> values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Vector for the token, or an empty span when out of vocabulary.
  std::span<const double> lookup(std::string_view token) const;
  bool contains(std::string_view token) const { return !lookup(token).empty(); }

  std::string to_text() const;

private:
  std::size_t dim_;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingTable load_table(const std::filesystem::path& path);
EmbeddingTable parse_table(std::string_view content);

struct DocVector {
  std::vector<double> values;
  std::size_t token_hits = 0;

  std::size_t dim() const { return values.size(); }
  bool zero_hit() const { return token_hits == 0; }
};

/// Lowercases, splits on whitespace and ASCII punctuation, keeps tokens that
/// contain at least one letter or digit.
std::vector<std::string> tokenize(std::string_view text);

/// Mean of in-vocabulary token vectors; zero vector with token_hits = 0 when
/// nothing hits.
DocVector embed_text(const EmbeddingTable& table, std::string_view text);

/// u.v / (|u||v|), 0 when either norm is 0. Dimension mismatch throws.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(const DocVector& u, const DocVector& v);

double dot(std::span<const double> u, std::span<const double> v);

/// Scales to unit L2 norm in place; zero vectors are left unchanged.
void normalize_l2(std::span<double> v);

}  // namespace editfx
