#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "editfx/tensor.hpp"
#include "json.hpp"

namespace editfx::nn {

/// Parameter file: the magic line "EDITFX-PARAMS 1\n", a little-endian
/// uint64 header length, a JSON header, then every parameter's float64
/// values (little-endian, row-major) in header order. The header's
/// "params" array lists {name, shape} and is filled in by save_params.
void save_params(const std::filesystem::path& path, nlohmann::json header, const ParamRefs& params);
std::string encode_params(nlohmann::json header, const ParamRefs& params);

struct LoadedParams {
  nlohmann::json header;
  std::vector<Param> params;
};

LoadedParams load_params(const std::filesystem::path& path);
LoadedParams decode_params(std::string_view blob);

/// Copies loaded values into `params` by position, checking names and shapes.
void assign_params(const LoadedParams& loaded, const ParamRefs& params);

}  // namespace editfx::nn
