#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "editfx/util.hpp"

namespace editfx {

/// One shared article: the headline and body as published, the social post
/// that linked to it, and the engagement the post received.
struct PairedRecord {
  std::string id;
  std::string outlet;
  std::string headline;
  std::string body_text;
  std::string post_text;
  std::string created_at;       // ISO-8601 UTC, as given in the source
  std::int64_t created_unix = 0;  // seconds since epoch, parsed from created_at
  std::int64_t replies = 0;
  std::int64_t retweets = 0;
  std::int64_t likes = 0;
  std::optional<std::string> section;

  bool has_empty_body() const;

  friend bool operator==(const PairedRecord&, const PairedRecord&) = default;
};

enum class CorpusFormat { jsonl, csv };

struct Rejection {
  std::size_t line = 0;  // 1-based physical line (jsonl) or row number (csv, header = 1)
  std::string reason;
};

class Corpus {
public:
  Corpus() = default;
  Corpus(std::vector<PairedRecord> records, std::string source_path);

  const std::vector<PairedRecord>& records() const { return records_; }
  const std::string& source_path() const { return source_path_; }
  const std::vector<Rejection>& rejections() const { return rejections_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Index of the record with this id, or nullopt.
  std::optional<std::size_t> find(std::string_view id) const;
  const PairedRecord& at(std::string_view id) const;

  /// Outlets in first-appearance order.
  std::vector<std::string> outlets() const;
  std::size_t empty_body_count() const;

  void set_rejections(std::vector<Rejection> rejections) { rejections_ = std::move(rejections); }

private:
  std::vector<PairedRecord> records_;
  std::string source_path_;
  std::vector<Rejection> rejections_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parses a corpus file. Malformed lines are recorded as rejections and
/// skipped. Unreadable files, duplicate ids and empty results throw DataError.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format = CorpusFormat::jsonl);
Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string source_path = {});

std::string to_jsonl(const Corpus& corpus);
void save_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// Trims, collapses whitespace runs to one space, and applies NFC.
std::string normalize(std::string_view text);

/// Exact, case-sensitive equality of normalized headline and post.
bool is_mirrored(const PairedRecord& record);

/// Share of the outlet's records that are mirrored. Unknown outlet throws.
double mirroring_fraction(const Corpus& corpus, std::string_view outlet);

struct MirroringCount {
  std::size_t mirrored = 0;
  std::size_t total = 0;
  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(mirrored) / total; }
};
std::map<std::string, MirroringCount> mirroring_by_outlet(const Corpus& corpus);

/// Posting-time blocks on a fixed UTC-4 clock: B1 [00,09), B2 [09,17), B3 [17,24).
enum class TimeBlock { B1, B2, B3 };

constexpr std::int64_t kEdtOffsetSeconds = -4 * 3600;

TimeBlock assign_time_block(const PairedRecord& record);
TimeBlock time_block_for(std::int64_t unix_seconds);
std::string_view to_string(TimeBlock block);
TimeBlock parse_time_block(std::string_view text);

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff]Z". Returns nullopt on malformed input.
std::optional<std::int64_t> parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(std::int64_t unix_seconds);

}  // namespace editfx
