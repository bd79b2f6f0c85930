#include "dinavd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dinavd {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string strip_comment(std::string_view line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_str = !in_str;
    } else if (c == '#' && !in_str) {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

bool valid_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Parses a quoted string starting at s[0] == '"'; returns it and the count of
// characters consumed.
std::pair<std::string, std::size_t> parse_string(std::string_view s, int line) {
  std::string out;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') return {out, i + 1};
    if (c == '\\') {
      if (i + 1 >= s.size()) break;
      const char e = s[++i];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, std::string("unsupported escape \\") + e);
      }
    } else {
      out += c;
    }
  }
  fail(line, "unterminated string");
}

ConfigValue parse_value(std::string_view s, int line) {
  if (s.empty()) fail(line, "missing value");
  if (s.front() == '"') {
    auto [str, used] = parse_string(s, line);
    if (!trim(s.substr(used)).empty()) fail(line, "trailing characters after string");
    return str;
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') fail(line, "arrays must open and close on one line");
    std::string_view body = trim(s.substr(1, s.size() - 2));
    std::vector<double> nums;
    std::vector<std::string> strs;
    while (!body.empty()) {
      if (body.front() == '"') {
        auto [str, used] = parse_string(body, line);
        strs.push_back(std::move(str));
        body = trim(body.substr(used));
      } else {
        const auto comma = body.find(',');
        const auto item = trim(body.substr(0, comma));
        const auto v = parse_number(item);
        if (!v) fail(line, "bad array element '" + std::string(item) + "'");
        nums.push_back(*v);
        body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma);
      }
      if (!body.empty()) {
        if (body.front() != ',') fail(line, "expected ',' between array elements");
        body = trim(body.substr(1));
      }
    }
    if (!nums.empty() && !strs.empty()) fail(line, "mixed-type arrays are not supported");
    if (!strs.empty()) return strs;
    return nums;
  }
  if (const auto v = parse_number(s)) return *v;
  fail(line, "cannot parse value '" + std::string(s) + "'");
}

// Typed access with field-named errors.
class Reader {
 public:
  explicit Reader(const ConfigTable& t) : t_(t) {}

  const ConfigEntry* find(const std::string& key) {
    auto it = t_.find(key);
    if (it == t_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  std::optional<double> number(const std::string& key) {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const double* d = std::get_if<double>(&e->value)) return *d;
    fail(e->line, "field '" + key + "': expected a number");
  }

  std::optional<long> integer(const std::string& key) {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    const double* d = std::get_if<double>(&e->value);
    if (!d || std::floor(*d) != *d) fail(e->line, "field '" + key + "': expected an integer");
    return static_cast<long>(*d);
  }

  std::optional<std::string> string(const std::string& key) {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&e->value)) return *s;
    fail(e->line, "field '" + key + "': expected a string");
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const auto* v = std::get_if<std::vector<double>>(&e->value)) return *v;
    fail(e->line, "field '" + key + "': expected an array of numbers");
  }

  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    if (const auto* v = std::get_if<std::vector<std::string>>(&e->value)) return *v;
    if (const auto* v = std::get_if<std::vector<double>>(&e->value); v && v->empty()) return std::vector<std::string>{};
    fail(e->line, "field '" + key + "': expected an array of strings");
  }

  std::optional<std::pair<double, double>> window(const std::string& key) {
    const auto v = numbers(key);
    if (!v) return std::nullopt;
    if (v->size() != 2 || !((*v)[0] < (*v)[1])) {
      fail(t_.at(key).line, "field '" + key + "': expected [lo, hi] with lo < hi");
    }
    return std::pair{(*v)[0], (*v)[1]};
  }

  std::optional<Vector> vector(const std::string& key) {
    const auto v = numbers(key);
    if (!v) return std::nullopt;
    return Eigen::Map<const Vector>(v->data(), static_cast<Eigen::Index>(v->size()));
  }

  int line_of(const std::string& key) const {
    auto it = t_.find(key);
    return it == t_.end() ? 0 : it->second.line;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : t_) {
      if (!used_.count(key)) fail(entry.line, "unknown field '" + key + "'");
    }
  }

 private:
  const ConfigTable& t_;
  std::set<std::string> used_;
};

const std::set<std::string> kContinuousKeys{"alpha", "beta", "t0", "t_end", "step", "sample_every", "x0", "v0"};
const std::set<std::string> kDiscreteKeys{"alpha", "beta", "h", "iterations", "t0", "lipschitz", "x0", "v0"};
const std::set<std::string> kAnalyses{"lyapunov", "energy", "rate", "tail", "little_o"};

}  // namespace

ConfigTable parse_config_text(std::string_view text) {
  ConfigTable table;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string stripped = strip_comment(raw);
    const std::string_view s = trim(stripped);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "malformed section header");
      const auto name = trim(s.substr(1, s.size() - 2));
      if (!valid_name(name)) fail(line, "invalid section name '" + std::string(name) + "'");
      section = std::string(name);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) fail(line, "expected 'key = value'");
    const auto key = trim(s.substr(0, eq));
    if (!valid_name(key)) fail(line, "invalid key '" + std::string(key) + "'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (table.count(full)) fail(line, "duplicate field '" + full + "'");
    table.emplace(full, ConfigEntry{parse_value(trim(s.substr(eq + 1)), line), line});
  }
  return table;
}

const std::vector<std::string>& system_tags() {
  static const std::vector<std::string> tags{"avd", "dinavd2", "dinavd1", "gdinavd", "perturbed", "ifb_avd", "fista", "fb"};
  return tags;
}

std::string to_string(SystemTag tag) { return system_tags()[static_cast<std::size_t>(tag)]; }

SystemTag parse_system_tag(std::string_view s) {
  const auto& tags = system_tags();
  const auto it = std::find(tags.begin(), tags.end(), s);
  if (it == tags.end()) {
    std::string msg = "unknown system tag '" + std::string(s) + "'; valid tags:";
    for (const auto& t : tags) msg += " " + t;
    throw ConfigError(msg);
  }
  return static_cast<SystemTag>(it - tags.begin());
}

bool is_discrete(SystemTag tag) {
  return tag == SystemTag::ifb_avd || tag == SystemTag::fista || tag == SystemTag::fb;
}

bool DiagnosticsRequest::wants(std::string_view analysis) const {
  return std::find(analyses.begin(), analyses.end(), analysis) != analyses.end();
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  const ConfigTable table = parse_config_text(text);
  Reader r(table);
  ExperimentConfig cfg;

  if (const auto v = r.integer("schema_version")) {
    if (*v != kConfigSchemaVersion) {
      fail(r.line_of("schema_version"), "unsupported schema_version " + std::to_string(*v) + " (this build reads " +
                                            std::to_string(kConfigSchemaVersion) + ")");
    }
  }
  if (const auto v = r.string("output_dir")) cfg.output_dir = *v;

  const auto id = r.string("problem.id");
  if (!id) throw ConfigError("config: missing field 'problem.id'");
  cfg.problem.id = *id;
  if (const ConfigEntry* e = r.find("problem.seed")) {
    if (const double* d = std::get_if<double>(&e->value); d && *d >= 0 && std::floor(*d) == *d && *d < 0x1.0p53) {
      cfg.problem.seed = static_cast<std::uint64_t>(*d);
    } else if (const auto* s = std::get_if<std::string>(&e->value)) {
      try {
        std::size_t pos = 0;
        cfg.problem.seed = std::stoull(*s, &pos, 0);
        if (pos != s->size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(e->line, "field 'problem.seed': not an unsigned 64-bit integer");
      }
    } else {
      fail(e->line, "field 'problem.seed': expected a nonnegative integer (quote seeds above 2^53)");
    }
  }

  const auto kind = r.string("system.kind");
  if (!kind) throw ConfigError("config: missing field 'system.kind'");
  try {
    cfg.system = parse_system_tag(*kind);
  } catch (const ConfigError& e) {
    fail(r.line_of("system.kind"), std::string("field 'system.kind': ") + e.what());
  }

  const bool discrete = is_discrete(cfg.system);
  const auto& allowed = discrete ? kDiscreteKeys : kContinuousKeys;
  for (const auto& [key, entry] : table) {
    if (key.rfind("params.", 0) == 0 && !allowed.count(key.substr(7))) {
      fail(entry.line, "field '" + key + "' is not valid for " + std::string(discrete ? "discrete" : "continuous") +
                           " system '" + *kind + "'");
    }
  }

  if (discrete) {
    AlgoParams p;
    if (auto v = r.number("params.alpha")) p.alpha = *v;
    if (auto v = r.number("params.beta")) p.beta = *v;
    if (auto v = r.number("params.h")) p.h = *v;
    if (auto v = r.integer("params.iterations")) p.iterations = *v;
    if (auto v = r.number("params.t0")) p.t0 = *v;
    if (auto v = r.number("params.lipschitz")) p.lipschitz = *v;
    if (auto v = r.vector("params.x0")) cfg.x0 = *v;
    if (auto v = r.vector("params.v0")) cfg.v0 = *v;
    cfg.params = p;
  } else {
    DynamicsParams p;
    if (auto v = r.number("params.alpha")) p.alpha = *v;
    if (auto v = r.number("params.beta")) p.beta = *v;
    if (auto v = r.number("params.t0")) p.t0 = *v;
    if (auto v = r.number("params.t_end")) p.t_end = *v;
    if (auto v = r.number("params.step")) p.step = *v;
    if (auto v = r.integer("params.sample_every")) p.sample_every = static_cast<int>(*v);
    if (auto v = r.vector("params.x0")) p.x0 = *v;
    if (auto v = r.vector("params.v0")) p.v0 = *v;
    cfg.params = p;
  }

  if (const auto name = r.string("perturbation.name")) {
    PerturbationChoice ps;
    ps.name = *name;
    if (auto c = r.numbers("perturbation.coeffs")) ps.coeffs = *c;
    const std::size_t want = ps.name == "power" ? 2 : ps.name == "constant" ? 1 : 0;
    if (ps.name != "none" && ps.name != "power" && ps.name != "constant") {
      fail(r.line_of("perturbation.name"), "field 'perturbation.name': unknown perturbation '" + ps.name +
                                               "'; valid: none power constant");
    }
    if (ps.coeffs.size() != want) {
      fail(r.line_of("perturbation.name"), "field 'perturbation.coeffs': '" + ps.name + "' takes " +
                                               std::to_string(want) + " coefficient(s)");
    }
    cfg.perturbation = ps;
  } else if (r.find("perturbation.coeffs")) {
    fail(r.line_of("perturbation.coeffs"), "field 'perturbation.coeffs' given without 'perturbation.name'");
  }

  if (auto a = r.strings("diagnostics.analyses")) {
    for (const auto& s : *a) {
      if (!kAnalyses.count(s)) {
        fail(r.line_of("diagnostics.analyses"),
             "field 'diagnostics.analyses': unknown analysis '" + s + "'; valid: lyapunov energy rate tail little_o");
      }
    }
    cfg.diagnostics.analyses = *a;
  } else {
    cfg.diagnostics.analyses = {"lyapunov", "energy", "rate", "tail"};
  }
  cfg.diagnostics.lambda = r.number("diagnostics.lambda");
  cfg.diagnostics.rate_window = r.window("diagnostics.rate_window");
  cfg.diagnostics.little_o_head = r.window("diagnostics.little_o_head");
  cfg.diagnostics.little_o_tail = r.window("diagnostics.little_o_tail");

  r.reject_unused();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_experiment_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o) {
  if (o.seed) cfg.problem.seed = *o.seed;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  if (auto* p = std::get_if<DynamicsParams>(&cfg.params)) {
    if (o.alpha) p->alpha = *o.alpha;
    if (o.beta) p->beta = *o.beta;
    if (o.t_end) p->t_end = *o.t_end;
    if (o.step) p->step = *o.step;
  } else {
    auto& a = std::get<AlgoParams>(cfg.params);
    if (o.alpha) a.alpha = *o.alpha;
    if (o.beta) a.beta = *o.beta;
    if (o.step) a.h = *o.step;
    if (o.t_end) {
      if (!(*o.t_end > a.t0)) throw ConfigError("--t-end must exceed t0");
      a.iterations = std::max(1L, std::lround((*o.t_end - a.t0) / a.h));
    }
  }
  validate(cfg);
}

void validate(const ExperimentConfig& cfg) {
  const bool discrete = is_discrete(cfg.system);
  if (discrete != std::holds_alternative<AlgoParams>(cfg.params)) {
    throw ConfigError("config: parameter kind does not match system '" + to_string(cfg.system) + "'");
  }
  const double alpha = discrete ? std::get<AlgoParams>(cfg.params).alpha : std::get<DynamicsParams>(cfg.params).alpha;
  if (cfg.diagnostics.lambda) {
    const double l = *cfg.diagnostics.lambda;
    if (alpha < 3.0 || l < 2.0 || l > alpha - 1.0) {
      throw ConfigError("config: field 'diagnostics.lambda' = " + std::to_string(l) +
                        " invalid for alpha = " + std::to_string(alpha) + " (need alpha >= 3, lambda in [2, alpha-1])");
    }
  }
  if (cfg.system == SystemTag::perturbed && !cfg.perturbation) {
    throw ConfigError("config: system 'perturbed' requires a [perturbation] section");
  }
  if (cfg.diagnostics.little_o_head.has_value() != cfg.diagnostics.little_o_tail.has_value()) {
    throw ConfigError("config: 'diagnostics.little_o_head' and 'little_o_tail' must be given together");
  }
}

}  // namespace dinavd
