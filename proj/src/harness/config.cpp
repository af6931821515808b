#include "svdpinn/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "svdpinn/errors.hpp"
#include "svdpinn/optim.hpp"

namespace svdpinn::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a finite number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void fail_keys(const std::vector<std::string>& problems) {
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ConfigError(msg);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  const char* root = std::getenv(kOutputRootEnv);
  c.out_dir = (root != nullptr && *root != '\0') ? std::filesystem::path(root) : "runs";
  return c;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "problem",   "dim",       "epsilon",         "width",        "nu",
      "seed",      "n_interior", "n_boundary",     "n_initial",    "n_test",
      "resample_every", "iters", "mode",           "sigma_optimizer", "sigma_lr",
      "main_lr",   "log_every", "out_dir",         "sweep_cells",  "sweep_modes",
      "sweep_sigma_optimizers", "sweep_sigma_lrs"};
  return keys;
}

void set_value(RunConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  const std::string k(key);
  if (k == "problem") c.problem = value;
  else if (k == "dim") c.dim = parse_unsigned(key, value);
  else if (k == "epsilon") c.epsilon = parse_double(key, value);
  else if (k == "width") c.width = parse_unsigned(key, value);
  else if (k == "nu") c.nu = parse_double(key, value);
  else if (k == "seed") c.seed = parse_unsigned(key, value);
  else if (k == "n_interior") c.n_interior = parse_unsigned(key, value);
  else if (k == "n_boundary") c.n_boundary = parse_unsigned(key, value);
  else if (k == "n_initial") c.n_initial = parse_unsigned(key, value);
  else if (k == "n_test") c.n_test = parse_unsigned(key, value);
  else if (k == "resample_every") c.resample_every = parse_unsigned(key, value);
  else if (k == "iters") c.iters = parse_unsigned(key, value);
  else if (k == "mode") c.mode = value;
  else if (k == "sigma_optimizer") c.sigma_optimizer = value;
  else if (k == "sigma_lr") c.sigma_lr = parse_double(key, value);
  else if (k == "main_lr") c.main_lr = parse_double(key, value);
  else if (k == "log_every") c.log_every = parse_unsigned(key, value);
  else if (k == "out_dir") c.out_dir = std::string(value);
  else if (k == "sweep_cells") c.sweep_cells = value;
  else if (k == "sweep_modes") c.sweep_modes = value;
  else if (k == "sweep_sigma_optimizers") c.sweep_sigma_optimizers = value;
  else if (k == "sweep_sigma_lrs") c.sweep_sigma_lrs = value;
  else throw ConfigError("unknown key '" + k + "'");
  c.explicit_keys.insert(k);
}

namespace {

void apply_line(RunConfig& c, std::string_view line, std::string_view where,
                std::vector<std::string>& problems) {
  const auto hash = line.find('#');
  line = trim(line.substr(0, hash));
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    problems.push_back(std::string(where) + ": expected key=value, got '" + std::string(line) + "'");
    return;
  }
  try {
    set_value(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  } catch (const ConfigError& e) {
    problems.push_back(std::string(where) + ": " + e.what());
  }
}

}  // namespace

void apply_text(RunConfig& c, std::string_view text, std::string_view source) {
  std::vector<std::string> problems;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    apply_line(c, text.substr(0, nl), std::string(source) + ":" + std::to_string(lineno), problems);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (!problems.empty()) fail_keys(problems);
}

RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<std::string>& overrides) {
  RunConfig c = default_config();
  std::vector<std::string> problems;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot read config file " + file->string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      apply_text(c, buf.str(), file->string());
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  }
  for (const auto& o : overrides) apply_line(c, o, "--set", problems);
  const auto invalid = validation_problems(c);
  problems.insert(problems.end(), invalid.begin(), invalid.end());
  if (!problems.empty()) fail_keys(problems);
  return c;
}

void validate(const RunConfig& c) {
  const auto problems = validation_problems(c);
  if (!problems.empty()) fail_keys(problems);
}

std::vector<std::string> validation_problems(const RunConfig& c) {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const char* msg) {
    if (!ok) problems.emplace_back(msg);
  };
  try {
    parse_problem_kind(c.problem);
  } catch (const ConfigError& e) {
    problems.push_back(std::string("problem: ") + e.what());
  }
  try {
    parse_train_mode(c.mode);
  } catch (const ConfigError& e) {
    problems.push_back(std::string("mode: ") + e.what());
  }
  try {
    parse_optimizer_kind(c.sigma_optimizer);
  } catch (const ConfigError& e) {
    problems.push_back(std::string("sigma_optimizer: ") + e.what());
  }
  check(c.dim >= 1, "dim: must be >= 1");
  check(c.width >= 1, "width: must be >= 1");
  check(c.nu > 0.0, "nu: must be > 0");
  check(c.n_interior >= 1, "n_interior: must be >= 1");
  check(c.n_boundary >= 1, "n_boundary: must be >= 1");
  check(c.n_initial >= 1, "n_initial: must be >= 1");
  check(c.n_test >= 1, "n_test: must be >= 1");
  check(c.log_every >= 1, "log_every: must be >= 1");
  check(c.main_lr >= 0.0, "main_lr: must be >= 0");
  check(c.sigma_lr >= 0.0, "sigma_lr: must be >= 0");
  check(!c.out_dir.empty(), "out_dir: must not be empty");
  for (auto lr : split_list(c.sweep_sigma_lrs)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(lr.data(), lr.data() + lr.size(), v);
    if (ec != std::errc{} || ptr != lr.data() + lr.size() || !(v >= 0.0)) {
      problems.push_back("sweep_sigma_lrs: bad learning rate '" + std::string(lr) + "'");
    }
  }
  return problems;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.iters = c.iters;
  t.log_every = c.log_every;
  t.nu = c.nu;
  t.main_lr = c.main_lr;
  t.sigma = {parse_optimizer_kind(c.sigma_optimizer), c.sigma_lr};
  t.counts = {c.n_interior, c.n_boundary, c.n_initial};
  t.n_test = c.n_test;
  t.seed = c.seed;
  t.resample_every = c.resample_every;
  return t;
}

std::unique_ptr<PdeProblem> problem_for(const RunConfig& c, double epsilon) {
  return make_problem(parse_problem_kind(c.problem), c.dim, epsilon);
}

std::uint64_t structural_hash(std::string_view problem, std::size_t dim, std::size_t width) {
  const std::string key = "problem=" + std::string(problem) + ";dim=" + std::to_string(dim) +
                          ";width=" + std::to_string(width) + ";outputs=1";
  return fnv1a64(key);
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace svdpinn::harness
