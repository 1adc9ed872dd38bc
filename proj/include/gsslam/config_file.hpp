#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace gsslam {

// Flat "key = value" config file; '#' starts a comment. Keys are dotted
// (e.g. tracking.alpha). Unknown keys are rejected by the consumer.
using KeyValueMap = std::map<std::string, std::string>;

KeyValueMap parse_key_value_file(const std::filesystem::path& path);
KeyValueMap parse_key_value_text(const std::string& text);
void write_key_value_file(const std::filesystem::path& path, const KeyValueMap& values);

}  // namespace gsslam
