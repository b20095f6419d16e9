#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "swept/cli.hpp"
#include "swept/error.hpp"

namespace swept {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema{
      {"kernel", "kernel", "wave", "identity|increment|average5|linear|wave|wide-stencil|euler"},
      {"kernel", "seed", "1", "seed for random initial conditions and linear weights"},
      {"kernel", "init", "default", "default|zeros|ones|random|index|delta|pulse|standing"},
      {"kernel", "symmetric", "false", "linear kernel: transpose-symmetric weights"},
      {"kernel", "cfl", "0.3", "wave Courant number"},
      {"kernel", "lx", "50", "euler domain length x"},
      {"kernel", "ly", "25", "euler domain length y"},
      {"kernel", "dt", "1e-6", "euler time step"},
      {"kernel", "rho", "1.084", "euler free-stream density"},
      {"kernel", "mach", "0.2", "euler free-stream Mach number"},
      {"kernel", "pressure", "101325", "euler free-stream pressure"},
      {"kernel", "gamma", "1.4", "euler ratio of specific heats"},
      {"kernel", "pulse", "0.01", "euler relative amplitude of a centered density/pressure pulse"},
      {"kernel", "obstacle", "false", "euler: enable the penalized obstacle"},
      {"kernel", "sigma", "1", "euler obstacle sharpness"},
      {"kernel", "eta", "1e-4", "euler obstacle penalization time scale"},

      {"topology", "px", "2", "ranks along x"},
      {"topology", "py", "2", "ranks along y"},
      {"topology", "n", "8", "points per rank side (even, >= 4)"},

      {"run", "engine", "swept", "serial|classic|swept"},
      {"run", "transport", "inproc", "inproc|tcp"},
      {"run", "roster", "", "tcp roster file: `rank cx cy host port` per line"},
      {"run", "rank", "0", "tcp: rank run by this process"},
      {"run", "timeout_ms", "60000", "receive timeout"},
      {"run", "tau_us", "0", "injected one-way latency in microseconds"},
      {"run", "cycles", "1", "swept cycles (n sub-steps each)"},
      {"run", "substeps", "0", "sub-steps; overrides cycles when positive"},
      {"run", "snapshot", "", "path for the final field snapshot"},
      {"run", "csv", "", "path for CSV output (stdout when empty)"},

      {"bench", "n_list", "8,16,32,64", "n values to sweep"},
      {"bench", "engines", "swept,classic", "engines to time"},
      {"bench", "repetitions", "5", "timed runs per point (median reported)"},
      {"bench", "warmup", "2", "untimed runs per point"},
      {"bench", "target_substeps", "64", "sub-steps per run, rounded up to whole cycles"},
      {"bench", "clock", "modeled", "wall|modeled: time reported in us_per_substep (run and bench)"},

      {"model", "s", "", "seconds per point per sub-step"},
      {"model", "tau", "", "seconds of latency per exchange"},
      {"model", "s_preset", "Nehalem-FV", "step-cost preset used when s is empty"},
      {"model", "tau_preset", "EC2", "latency preset used when tau is empty"},
      {"model", "n_min", "4", "smallest n"},
      {"model", "n_max", "4096", "largest n"},

      {"verify", "max_px", "3", "largest px"},
      {"verify", "max_py", "3", "largest py"},
      {"verify", "n_values", "4,8,16", "n values"},
      {"verify", "kernels", "increment,identity,wave,wide-stencil,euler", "kernels"},
      {"verify", "max_cycles", "3", "cycles 1..max_cycles are compared"},
      {"verify", "fault", "none", "none|miswire (negative control)"},
  };
  return schema;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
  const auto& s = config_schema();
  const auto it = std::find_if(s.begin(), s.end(), [&](const ConfigKey& k) { return k.name == name; });
  return it == s.end() ? nullptr : &*it;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config::Config() {
  for (const ConfigKey& k : config_schema()) values_[k.name] = k.default_value;
}

void Config::load_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("config", where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      const auto& s = config_schema();
      if (std::none_of(s.begin(), s.end(), [&](const ConfigKey& k) { return k.section == section; })) {
        throw ValidationError("config", where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config", where + ": expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const ConfigKey* spec = find_key(key);
    if (spec == nullptr) throw ValidationError(key, where + ": unknown key");
    if (!section.empty() && spec->section != section) {
      throw ValidationError(key, where + ": belongs in [" + spec->section + "], not [" + section + "]");
    }
    values_[key] = trim(line.substr(eq + 1));
  }
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  if (find_key(key) == nullptr) throw ValidationError(key, "unknown key");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError(key, "unknown key");
  return it->second;
}

long long Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const long long r = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno != 0) throw ValidationError(key, "expected an integer, got '" + v + "'");
  return r;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* end = nullptr;
  errno = 0;
  const double r = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) throw ValidationError(key, "expected a number, got '" + v + "'");
  return r;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError(key, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const { return split(get(key), ','); }

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& item : get_list(key)) {
    char* end = nullptr;
    const long v = std::strtol(item.c_str(), &end, 10);
    if (*end != '\0') throw ValidationError(key, "expected a list of integers, got '" + item + "'");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ValidationError(key, "list is empty");
  return out;
}

}  // namespace swept
