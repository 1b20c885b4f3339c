#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <CLI11.hpp>

namespace rope::cli {

/// key = value pairs; '#' starts a comment. Keys may be prefixed with a
/// subcommand name ("counts.B") to apply to that subcommand only.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

/// Fills options of `command` that were not given on the command line from
/// `config`. Subcommand-prefixed keys win over plain keys. Returns the
/// keys prefixed with this subcommand that matched no option; unmatched
/// plain keys may belong to other subcommands and are ignored.
std::vector<std::string> apply_config(CLI::App& command, const std::map<std::string, std::string>& config);

}  // namespace rope::cli
