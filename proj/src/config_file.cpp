#include "gsslam/config_file.hpp"

#include <fstream>
#include <sstream>

#include "gsslam/errors.hpp"

namespace gsslam {

namespace {
std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

KeyValueMap parse_key_value_text(const std::string& text) {
  KeyValueMap out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::BadConfig,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorKind::BadConfig, "line " + std::to_string(line_no) + ": empty key");
    }
    out[key] = value;
  }
  return out;
}

KeyValueMap parse_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::BadConfig, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_value_text(ss.str());
}

void write_key_value_file(const std::filesystem::path& path, const KeyValueMap& values) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::BadConfig, "cannot write config file " + path.string());
  for (const auto& [key, value] : values) out << key << " = " << value << "\n";
}

}  // namespace gsslam
