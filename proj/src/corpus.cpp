#include "editfx/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "json.hpp"

namespace editfx {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kRequiredKeys[] = {"id",        "outlet",     "headline", "body_text", "post_text",
                                              "created_at", "replies", "retweets", "likes"};

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

std::optional<std::int64_t> parse_count(std::string_view s) {
  if (!all_digits(s) || s.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

// Builds a record from string-valued fields; counts are validated separately.
struct RawFields {
  std::map<std::string, std::string> text;
  std::optional<std::int64_t> replies, retweets, likes;
  std::optional<std::string> section;
};

std::optional<std::string> validate(const RawFields& raw, PairedRecord& out) {
  for (auto key : {"id", "outlet", "headline", "body_text", "post_text", "created_at"}) {
    auto it = raw.text.find(key);
    if (it == raw.text.end()) return std::string("missing required field `") + key + "`";
    if (!is_valid_utf8(it->second)) return std::string("field `") + key + "` is not valid UTF-8";
  }
  out.id = raw.text.at("id");
  out.outlet = raw.text.at("outlet");
  out.headline = raw.text.at("headline");
  out.body_text = raw.text.at("body_text");
  out.post_text = raw.text.at("post_text");
  out.created_at = raw.text.at("created_at");
  if (out.id.empty()) return "empty `id`";
  if (out.outlet.empty()) return "empty `outlet`";
  if (normalize(out.headline).empty()) return "`headline` is empty after normalization";
  if (normalize(out.post_text).empty()) return "`post_text` is empty after normalization";
  auto ts = parse_iso8601_utc(out.created_at);
  if (!ts) return "`created_at` is not an ISO-8601 UTC timestamp";
  out.created_unix = *ts;
  if (!raw.replies) return "`replies` must be a non-negative integer";
  if (!raw.retweets) return "`retweets` must be a non-negative integer";
  if (!raw.likes) return "`likes` must be a non-negative integer";
  out.replies = *raw.replies;
  out.retweets = *raw.retweets;
  out.likes = *raw.likes;
  if (raw.section && !is_valid_utf8(*raw.section)) return "field `section` is not valid UTF-8";
  out.section = raw.section;
  return std::nullopt;
}

std::optional<std::int64_t> json_count(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (v.is_number_unsigned()) return static_cast<std::int64_t>(v.get<std::uint64_t>());
  if (v.is_number_integer()) {
    auto x = v.get<std::int64_t>();
    if (x >= 0) return x;
  }
  return std::nullopt;
}

std::optional<std::string> parse_json_line(std::string_view line, PairedRecord& out) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    return std::string("malformed JSON: ") + e.what();
  }
  if (!obj.is_object()) return "line is not a JSON object";
  RawFields raw;
  for (auto key : kRequiredKeys) {
    if (!obj.contains(key)) return "missing required field `" + std::string(key) + "`";
  }
  for (auto key : {"id", "outlet", "headline", "body_text", "post_text", "created_at"}) {
    const auto& v = obj.at(key);
    if (!v.is_string()) return std::string("field `") + key + "` must be a string";
    raw.text[key] = v.get<std::string>();
  }
  raw.replies = json_count(obj, "replies");
  raw.retweets = json_count(obj, "retweets");
  raw.likes = json_count(obj, "likes");
  if (obj.contains("section") && !obj.at("section").is_null()) {
    if (!obj.at("section").is_string()) return "field `section` must be a string";
    raw.section = obj.at("section").get<std::string>();
  }
  return validate(raw, out);
}

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> cells;
  std::optional<std::string> error;
};

// RFC 4180 reader; quoted cells may span lines.
std::vector<CsvRow> read_csv(std::string_view content) {
  std::vector<CsvRow> rows;
  std::size_t i = 0;
  std::size_t line = 1;
  while (i < content.size()) {
    CsvRow row;
    row.line = line;
    std::string cell;
    bool in_quotes = false;
    bool row_done = false;
    while (!row_done) {
      if (i >= content.size()) {
        if (in_quotes) row.error = "unterminated quoted field";
        row.cells.push_back(std::move(cell));
        break;
      }
      char c = content[i++];
      if (in_quotes) {
        if (c == '"') {
          if (i < content.size() && content[i] == '"') {
            cell.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          cell.push_back(c);
        }
        continue;
      }
      switch (c) {
        case '"':
          in_quotes = true;
          break;
        case ',':
          row.cells.push_back(std::move(cell));
          cell.clear();
          break;
        case '\r':
          break;
        case '\n':
          ++line;
          row.cells.push_back(std::move(cell));
          row_done = true;
          break;
        default:
          cell.push_back(c);
      }
    }
    if (!(row.cells.size() == 1 && row.cells[0].empty() && !row.error)) {
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void check_and_add(std::vector<PairedRecord>& records, std::set<std::string>& seen, PairedRecord rec,
                   std::size_t line) {
  if (!seen.insert(rec.id).second) {
    throw DataError("duplicate record id \"" + rec.id + "\" at line " + std::to_string(line));
  }
  records.push_back(std::move(rec));
}

}  // namespace

bool PairedRecord::has_empty_body() const { return normalize(body_text).empty(); }

Corpus::Corpus(std::vector<PairedRecord> records, std::string source_path)
    : records_(std::move(records)), source_path_(std::move(source_path)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second) {
      throw DataError("duplicate record id \"" + records_[i].id + "\"");
    }
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const PairedRecord& Corpus::at(std::string_view id) const {
  auto idx = find(id);
  if (!idx) throw InvalidArgument("unknown record id: " + std::string(id));
  return records_[*idx];
}

std::vector<std::string> Corpus::outlets() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : records_) {
    if (seen.insert(r.outlet).second) out.push_back(r.outlet);
  }
  return out;
}

std::size_t Corpus::empty_body_count() const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.has_empty_body(); }));
}

Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string source_path) {
  std::vector<PairedRecord> records;
  std::vector<Rejection> rejections;
  std::set<std::string> seen;

  if (format == CorpusFormat::jsonl) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
      auto nl = content.find('\n', pos);
      auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++line_no;
      pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
      PairedRecord rec;
      if (auto err = parse_json_line(line, rec)) {
        rejections.push_back({line_no, *err});
        continue;
      }
      check_and_add(records, seen, std::move(rec), line_no);
    }
  } else {
    auto rows = read_csv(content);
    if (rows.empty()) throw DataError("empty CSV file: " + source_path);
    std::map<std::string, std::size_t> columns;
    for (std::size_t c = 0; c < rows[0].cells.size(); ++c) columns[rows[0].cells[c]] = c;
    for (auto key : kRequiredKeys) {
      if (!columns.count(std::string(key))) {
        throw DataError("CSV header lacks required column `" + std::string(key) + "`");
      }
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.error) {
        rejections.push_back({row.line, *row.error});
        continue;
      }
      if (row.cells.size() != rows[0].cells.size()) {
        rejections.push_back({row.line, "expected " + std::to_string(rows[0].cells.size()) + " cells, got " +
                                            std::to_string(row.cells.size())});
        continue;
      }
      RawFields raw;
      for (auto key : {"id", "outlet", "headline", "body_text", "post_text", "created_at"}) {
        raw.text[key] = row.cells[columns.at(key)];
      }
      raw.replies = parse_count(row.cells[columns.at("replies")]);
      raw.retweets = parse_count(row.cells[columns.at("retweets")]);
      raw.likes = parse_count(row.cells[columns.at("likes")]);
      if (auto it = columns.find("section"); it != columns.end() && !row.cells[it->second].empty()) {
        raw.section = row.cells[it->second];
      }
      PairedRecord rec;
      if (auto err = validate(raw, rec)) {
        rejections.push_back({row.line, *err});
        continue;
      }
      check_and_add(records, seen, std::move(rec), row.line);
    }
  }

  if (records.empty()) {
    throw DataError("no valid records in " + (source_path.empty() ? std::string("input") : source_path) + " (" +
                    std::to_string(rejections.size()) + " rejected)");
  }
  Corpus corpus(std::move(records), std::move(source_path));
  corpus.set_rejections(std::move(rejections));
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw DataError("cannot read corpus file: " + path.string());
  }
  return parse_corpus(read_file(path), format, path.string());
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus.records()) {
    ordered_json obj;
    obj["id"] = r.id;
    obj["outlet"] = r.outlet;
    obj["headline"] = r.headline;
    obj["body_text"] = r.body_text;
    obj["post_text"] = r.post_text;
    obj["created_at"] = r.created_at;
    obj["replies"] = r.replies;
    obj["retweets"] = r.retweets;
    obj["likes"] = r.likes;
    if (r.section) obj["section"] = *r.section;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_jsonl(const Corpus& corpus, const std::filesystem::path& path) { write_file_atomic(path, to_jsonl(corpus)); }

std::string normalize(std::string_view text) {
  auto scalars = utf8_to_scalars_lenient(text);
  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (char32_t c : scalars) {
    if (u_isUWhiteSpace(static_cast<UChar32>(c))) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) {
      collapsed.append(static_cast<UChar>(' '));
      pending_space = false;
    }
    collapsed.append(static_cast<UChar32>(c));
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  icu::UnicodeString composed = nfc->normalize(collapsed, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  composed.toUTF8String(out);
  return out;
}

bool is_mirrored(const PairedRecord& record) { return normalize(record.headline) == normalize(record.post_text); }

double mirroring_fraction(const Corpus& corpus, std::string_view outlet) {
  std::size_t total = 0;
  std::size_t mirrored = 0;
  for (const auto& r : corpus.records()) {
    if (r.outlet != outlet) continue;
    ++total;
    if (is_mirrored(r)) ++mirrored;
  }
  if (total == 0) throw InvalidArgument("unknown outlet: " + std::string(outlet));
  return static_cast<double>(mirrored) / static_cast<double>(total);
}

std::map<std::string, MirroringCount> mirroring_by_outlet(const Corpus& corpus) {
  std::map<std::string, MirroringCount> out;
  for (const auto& r : corpus.records()) {
    auto& c = out[r.outlet];
    ++c.total;
    if (is_mirrored(r)) ++c.mirrored;
  }
  return out;
}

TimeBlock time_block_for(std::int64_t unix_seconds) {
  std::int64_t local = unix_seconds + kEdtOffsetSeconds;
  std::int64_t sod = ((local % 86400) + 86400) % 86400;
  std::int64_t hour = sod / 3600;
  if (hour < 9) return TimeBlock::B1;
  if (hour < 17) return TimeBlock::B2;
  return TimeBlock::B3;
}

TimeBlock assign_time_block(const PairedRecord& record) { return time_block_for(record.created_unix); }

std::string_view to_string(TimeBlock block) {
  switch (block) {
    case TimeBlock::B1:
      return "B1";
    case TimeBlock::B2:
      return "B2";
    case TimeBlock::B3:
      return "B3";
  }
  return "?";
}

TimeBlock parse_time_block(std::string_view text) {
  if (text == "B1") return TimeBlock::B1;
  if (text == "B2") return TimeBlock::B2;
  if (text == "B3") return TimeBlock::B3;
  throw InvalidArgument("unknown time block: " + std::string(text));
}

std::optional<std::int64_t> parse_iso8601_utc(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS[.f+]Z
  if (s.size() < 20 || s.back() != 'Z') return std::nullopt;
  if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') || s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  auto y = s.substr(0, 4), mo = s.substr(5, 2), d = s.substr(8, 2);
  auto h = s.substr(11, 2), mi = s.substr(14, 2), se = s.substr(17, 2);
  for (auto part : {y, mo, d, h, mi, se}) {
    if (!all_digits(part)) return std::nullopt;
  }
  auto rest = s.substr(19, s.size() - 20);
  if (!rest.empty()) {
    if (rest[0] != '.' || !all_digits(rest.substr(1))) return std::nullopt;
  }
  const int year = to_int(y);
  const auto month = static_cast<unsigned>(to_int(mo));
  const auto day = static_cast<unsigned>(to_int(d));
  const int hour = to_int(h), minute = to_int(mi), second = to_int(se);
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) return std::nullopt;
  if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
  return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_iso8601_utc(std::int64_t t) {
  std::int64_t days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  std::int64_t sod = t - days * 86400;
  // civil_from_days
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const auto doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<long long>(y), m, d,
                static_cast<long long>(sod / 3600), static_cast<long long>(sod % 3600 / 60),
                static_cast<long long>(sod % 60));
  return buf;
}

}  // namespace editfx
