#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace noisyal::detail {

using ordered_json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);
// Writes atomically enough for our purposes: to a temp file, then renames.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Parses JSON text, converting syntax errors into ParseError tagged with
// `what` (typically the file name).
nlohmann::json parse_json(std::string_view text, std::string_view what);

// Typed field access with the element path in the error message.
const nlohmann::json& require(const nlohmann::json& obj, std::string_view key,
                              const std::string& path);
double require_number(const nlohmann::json& obj, std::string_view key,
                      const std::string& path);
std::int64_t require_integer(const nlohmann::json& obj, std::string_view key,
                             const std::string& path);
const nlohmann::json& require_array(const nlohmann::json& obj, std::string_view key,
                                    const std::string& path);

}  // namespace noisyal::detail
