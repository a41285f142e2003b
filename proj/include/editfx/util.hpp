#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace editfx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or semantically invalid input data (files, configs, specs).
class DataError : public Error {
public:
  using Error::Error;
};

/// A precondition on arguments was violated.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Decodes UTF-8 into Unicode scalar values. Invalid sequences throw DataError.
std::u32string utf8_to_scalars(std::string_view text);
bool is_valid_utf8(std::string_view text);
/// Like utf8_to_scalars, but maps invalid sequences to U+FFFD.
std::u32string utf8_to_scalars_lenient(std::string_view text);
std::string scalars_to_utf8(std::u32string_view scalars);

}  // namespace editfx
