#include "editfx/serialize.hpp"

#include <bit>
#include <cstring>

namespace editfx::nn {

namespace {

constexpr std::string_view kMagic = "EDITFX-PARAMS 1\n";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_params(nlohmann::json header, const ParamRefs& params) {
  auto list = nlohmann::json::array();
  for (const auto* p : params) list.push_back({{"name", p->name}, {"shape", p->value.shape()}});
  header["params"] = list;
  const std::string text = header.dump();
  std::string out(kMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto* p : params) {
    for (double v : p->value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

void save_params(const std::filesystem::path& path, nlohmann::json header, const ParamRefs& params) {
  write_file_atomic(path, encode_params(std::move(header), params));
}

LoadedParams decode_params(std::string_view blob) {
  if (blob.substr(0, kMagic.size()) != kMagic) throw DataError("not an editfx parameter file");
  std::size_t pos = kMagic.size();
  if (blob.size() < pos + 8) throw DataError("truncated parameter file");
  const auto header_len = get_u64(blob, pos);
  pos += 8;
  if (blob.size() < pos + header_len) throw DataError("truncated parameter header");
  LoadedParams out;
  try {
    out.header = nlohmann::json::parse(blob.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad parameter header: ") + e.what());
  }
  pos += header_len;
  for (const auto& entry : out.header.at("params")) {
    auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    Tensor t(shape);
    if (blob.size() < pos + 8 * t.size()) throw DataError("truncated parameter data");
    for (std::size_t i = 0; i < t.size(); ++i, pos += 8) t[i] = std::bit_cast<double>(get_u64(blob, pos));
    out.params.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  if (pos != blob.size()) throw DataError("trailing bytes in parameter file");
  return out;
}

LoadedParams load_params(const std::filesystem::path& path) { return decode_params(read_file(path)); }

void assign_params(const LoadedParams& loaded, const ParamRefs& params) {
  if (loaded.params.size() != params.size()) throw DataError("parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = loaded.params[i];
    if (src.name != params[i]->name || src.value.shape() != params[i]->value.shape()) {
      throw DataError("parameter mismatch at " + params[i]->name);
    }
    params[i]->value = src.value;
  }
}

}  // namespace editfx::nn
