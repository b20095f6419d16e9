#pragma once

// The swept2d command line: `run | bench | model | verify`.

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace swept {

enum ExitCode : int {
  kExitOk = 0,
  kExitDivergence = 1,
  kExitUsage = 2,
  kExitNumeric = 3,
  kExitTransport = 4,
  kExitOther = 5,
};

struct ConfigKey {
  std::string section;
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its default. Keys are unique across sections.
const std::vector<ConfigKey>& config_schema();

/// Flat `key = value` settings with `[section]` headers and `#` comments.
class Config {
 public:
  /// All schema defaults.
  Config();

  /// Throws ValidationError naming the key or the offending line.
  void load_text(const std::string& text, const std::string& source = "config");
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Full CLI including argument parsing. Returns the process exit code; error
/// messages go to `err` as one `error: <kind>: <message>` line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_run(const Config& cfg, std::ostream& out);
int cmd_bench(const Config& cfg, std::ostream& out);
int cmd_model(const Config& cfg, std::ostream& out);
int cmd_verify(const Config& cfg, std::ostream& out);

}  // namespace swept
