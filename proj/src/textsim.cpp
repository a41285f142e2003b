#include "editfx/textsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <thread>

#include "editfx/util.hpp"

namespace editfx {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + cost});
      diag = up;
    }
  }
  return row[b.size()];
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
  const auto sa = utf8_to_scalars_lenient(a);
  const auto sb = utf8_to_scalars_lenient(b);
  const std::size_t longest = std::max(sa.size(), sb.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(sa, sb)) / static_cast<double>(longest);
}

namespace {

EditProfile profile_one(const PairedRecord& r, const EmbeddingTable& table) {
  EditProfile p;
  p.record_id = r.id;
  const auto headline = normalize(r.headline);
  const auto post = normalize(r.post_text);
  p.mirrored = headline == post;
  p.edit_distance = p.mirrored ? 0.0 : normalized_edit_distance(headline, post);
  const auto h = embed_text(table, headline);
  const auto t = embed_text(table, post);
  p.zero_hit = h.zero_hit() || t.zero_hit();
  p.embedding_similarity = p.zero_hit ? 0.0 : cosine(h, t);
  return p;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("profile CSV line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

constexpr const char* kProfileHeader =
    "record_id,edit_distance,embedding_similarity,mirrored,cluster,headline_clickbait,post_clickbait";

}  // namespace

std::vector<EditProfile> profile(const Corpus& corpus, const EmbeddingTable& table, unsigned jobs) {
  const auto& records = corpus.records();
  std::vector<EditProfile> out(records.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(records.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) out[i] = profile_one(records[i], table);
    return out;
  }
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < records.size(); i += jobs) out[i] = profile_one(records[i], table);
    });
  }
  for (auto& t : workers) t.join();
  return out;
}

std::string profiles_to_csv(const std::vector<EditProfile>& profiles) {
  std::string out = kProfileHeader;
  out += '\n';
  for (const auto& p : profiles) {
    out += quote_csv(p.record_id);
    out += ',';
    out += format_double(p.edit_distance);
    out += ',';
    out += format_double(p.embedding_similarity);
    out += ',';
    out += p.mirrored ? "1" : "0";
    out += ',';
    if (p.cluster) out += std::to_string(*p.cluster);
    out += ',';
    out += opt_cell(p.headline_clickbait);
    out += ',';
    out += opt_cell(p.post_clickbait);
    out += '\n';
  }
  return out;
}

std::vector<EditProfile> profiles_from_csv(std::string_view content) {
  std::vector<EditProfile> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    auto line = content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? content.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kProfileHeader) throw DataError("profile CSV has an unexpected header");
      header_seen = true;
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != 7) {
      throw DataError("profile CSV line " + std::to_string(line_no) + ": expected 7 cells");
    }
    EditProfile p;
    p.record_id = cells[0];
    p.edit_distance = parse_number(cells[1], line_no);
    p.embedding_similarity = parse_number(cells[2], line_no);
    if (cells[3] != "0" && cells[3] != "1") {
      throw DataError("profile CSV line " + std::to_string(line_no) + ": mirrored must be 0 or 1");
    }
    p.mirrored = cells[3] == "1";
    if (!cells[4].empty()) p.cluster = static_cast<int>(parse_number(cells[4], line_no));
    if (!cells[5].empty()) p.headline_clickbait = parse_number(cells[5], line_no);
    if (!cells[6].empty()) p.post_clickbait = parse_number(cells[6], line_no);
    auto in_range = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in_range(p.edit_distance, 0.0, 1.0) || !in_range(p.embedding_similarity, -1.0, 1.0) ||
        (p.headline_clickbait && !in_range(*p.headline_clickbait, 0.0, 1.0)) ||
        (p.post_clickbait && !in_range(*p.post_clickbait, 0.0, 1.0)) || (p.cluster && *p.cluster < 0)) {
      throw DataError("profile CSV line " + std::to_string(line_no) + ": value out of range");
    }
    out.push_back(std::move(p));
  }
  if (!header_seen) throw DataError("profile CSV is empty");
  return out;
}

void save_profiles(const std::vector<EditProfile>& profiles, const std::filesystem::path& path) {
  write_file_atomic(path, profiles_to_csv(profiles));
}

std::vector<EditProfile> load_profiles(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw DataError("cannot read profile file: " + path.string());
  return profiles_from_csv(read_file(path));
}

}  // namespace editfx
