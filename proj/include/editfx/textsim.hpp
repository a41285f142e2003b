#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "editfx/corpus.hpp"
#include "editfx/embedding.hpp"
#include "editfx/stats.hpp"

namespace editfx {

/// Headline -> post similarity profile for one record.
struct EditProfile {
  std::string record_id;
  double edit_distance = 0.0;         // normalized Levenshtein, [0, 1]
  double embedding_similarity = 0.0;  // cosine, [-1, 1]
  bool mirrored = false;
  std::optional<int> cluster;
  std::optional<double> headline_clickbait;
  std::optional<double> post_clickbait;
  bool zero_hit = false;  // headline or post had no in-vocabulary token; not serialized

  friend bool operator==(const EditProfile&, const EditProfile&) = default;
};

/// Unit-cost Levenshtein distance over code sequences.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

/// Levenshtein distance over Unicode scalar values divided by the longer
/// length; 0 when both are empty.
double normalized_edit_distance(std::string_view a, std::string_view b);

/// One profile per record, in corpus order. Texts are normalized before the
/// edit distance is taken.
std::vector<EditProfile> profile(const Corpus& corpus, const EmbeddingTable& table, unsigned jobs = 1);

/// CSV with columns record_id, edit_distance, embedding_similarity, mirrored,
/// cluster, headline_clickbait, post_clickbait. Unset optionals are empty.
std::string profiles_to_csv(const std::vector<EditProfile>& profiles);
std::vector<EditProfile> profiles_from_csv(std::string_view content);
void save_profiles(const std::vector<EditProfile>& profiles, const std::filesystem::path& path);
std::vector<EditProfile> load_profiles(const std::filesystem::path& path);

}  // namespace editfx
