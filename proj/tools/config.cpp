#include "config.hpp"

#include <fstream>
#include <set>

#include "rope/error.hpp"

namespace rope::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(path.string() + ":" + std::to_string(number) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[key] = value;
  }
  return out;
}

std::vector<std::string> apply_config(CLI::App& command, const std::map<std::string, std::string>& config) {
  const std::string prefix = command.get_name() + ".";
  std::set<std::string> used;
  for (CLI::Option* opt : command.get_options()) {
    if (opt->get_lnames().empty() || opt->count() > 0) continue;
    const std::string& name = opt->get_lnames().front();
    auto it = config.find(prefix + name);
    if (it == config.end()) it = config.find(name);
    if (it == config.end()) continue;
    used.insert(it->first);
    if (opt->get_type_size() == 0) {
      if (it->second == "true" || it->second == "1") opt->add_result("true");
      else if (it->second == "false" || it->second == "0") continue;
      else throw InvalidArgument("config key " + it->first + " expects true or false");
    } else if (opt->get_items_expected_max() > 1) {
      std::size_t start = 0;
      while (start <= it->second.size()) {
        const auto comma = it->second.find(',', start);
        opt->add_result(trim(it->second.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    } else {
      opt->add_result(it->second);
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw InvalidArgument("config key " + it->first + ": " + e.what());
    }
  }
  std::vector<std::string> unknown;
  for (const auto& [key, value] : config)
    if (key.starts_with(prefix) && !used.contains(key)) unknown.push_back(key);
  return unknown;
}

}  // namespace rope::cli
