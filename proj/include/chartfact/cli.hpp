#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartfact::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kBackend = 3, kPartial = 4 };

// Fully resolved settings of one run: built-in defaults, then the config
// file, then command-line flags. Keys are flag names without dashes.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> values;

  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;

  // "key=value" lines in key order; what every run writes beside its outputs.
  std::string to_text() const;
};

// Flat "key = value" lines; '#' starts a comment line.
std::map<std::string, std::string> parse_config_text(std::string_view text);

// Entry point shared by the executable and the tests. argv[0] is the
// program name.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace chartfact::cli
