#include "softac/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "softac/envs.hpp"

namespace softac {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

TomlValue parse_scalar(const std::string& raw, int line_no) {
  const std::string s = trim(raw);
  TomlValue v;
  if (s.empty()) throw std::invalid_argument("config: empty value on line " + std::to_string(line_no));
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw std::invalid_argument("config: unterminated string on line " + std::to_string(line_no));
    v.kind = TomlValue::Kind::kString;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = TomlValue::Kind::kBool;
    v.boolean = (s == "true");
    return v;
  }
  const bool looks_float = s.find_first_of(".eE") != std::string::npos &&
                           s.find_first_not_of("+-0123456789.eE") == std::string::npos;
  try {
    std::size_t used = 0;
    if (looks_float) {
      v.kind = TomlValue::Kind::kFloat;
      v.real = std::stod(s, &used);
    } else {
      v.kind = TomlValue::Kind::kInt;
      v.integer = std::stoll(s, &used);
    }
    if (used != s.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw std::invalid_argument("config: cannot parse value '" + s + "' on line " +
                                std::to_string(line_no));
  }
  return v;
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

}  // namespace

TomlDoc TomlDoc::parse(const std::string& text) {
  TomlDoc doc;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section on line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section))
        throw std::invalid_argument("config: bad section name on line " + std::to_string(line_no));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value on line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key))
      throw std::invalid_argument("config: bad key on line " + std::to_string(line_no));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (doc.values_.count(full_key))
      throw std::invalid_argument("config: duplicate key '" + full_key + "'");

    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw std::invalid_argument("config: arrays must be single-line (line " +
                                    std::to_string(line_no) + ")");
      TomlValue arr;
      arr.kind = TomlValue::Kind::kArray;
      const std::string inner = value.substr(1, value.size() - 2);
      std::string item;
      bool in_string = false;
      for (char c : inner) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
          if (!trim(item).empty()) arr.array.push_back(parse_scalar(item, line_no));
          item.clear();
        } else {
          item += c;
        }
      }
      if (!trim(item).empty()) arr.array.push_back(parse_scalar(item, line_no));
      doc.values_[full_key] = std::move(arr);
    } else {
      doc.values_[full_key] = parse_scalar(value, line_no);
    }
  }
  return doc;
}

const TomlValue& TomlDoc::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: missing key '" + key + "'");
  consumed_.insert(key);
  return it->second;
}

std::string TomlDoc::get_string(const std::string& key) const {
  const TomlValue& v = raw(key);
  if (v.kind != TomlValue::Kind::kString)
    throw std::invalid_argument("config: key '" + key + "' must be a string");
  return v.str;
}

std::int64_t TomlDoc::get_int(const std::string& key) const {
  const TomlValue& v = raw(key);
  if (v.kind != TomlValue::Kind::kInt)
    throw std::invalid_argument("config: key '" + key + "' must be an integer");
  return v.integer;
}

double TomlDoc::get_double(const std::string& key) const {
  const TomlValue& v = raw(key);
  if (v.kind == TomlValue::Kind::kFloat) return v.real;
  if (v.kind == TomlValue::Kind::kInt) return static_cast<double>(v.integer);
  throw std::invalid_argument("config: key '" + key + "' must be a number");
}

bool TomlDoc::get_bool(const std::string& key) const {
  const TomlValue& v = raw(key);
  if (v.kind != TomlValue::Kind::kBool)
    throw std::invalid_argument("config: key '" + key + "' must be a boolean");
  return v.boolean;
}

std::vector<double> TomlDoc::get_double_array(const std::string& key) const {
  const TomlValue& v = raw(key);
  if (v.kind != TomlValue::Kind::kArray)
    throw std::invalid_argument("config: key '" + key + "' must be an array");
  std::vector<double> out;
  for (const TomlValue& item : v.array) {
    if (item.kind == TomlValue::Kind::kFloat)
      out.push_back(item.real);
    else if (item.kind == TomlValue::Kind::kInt)
      out.push_back(static_cast<double>(item.integer));
    else
      throw std::invalid_argument("config: key '" + key + "' must hold numbers");
  }
  return out;
}

std::vector<std::int64_t> TomlDoc::get_int_array(const std::string& key) const {
  const TomlValue& v = raw(key);
  if (v.kind != TomlValue::Kind::kArray)
    throw std::invalid_argument("config: key '" + key + "' must be an array");
  std::vector<std::int64_t> out;
  for (const TomlValue& item : v.array) {
    if (item.kind != TomlValue::Kind::kInt)
      throw std::invalid_argument("config: key '" + key + "' must hold integers");
    out.push_back(item.integer);
  }
  return out;
}

std::vector<std::string> TomlDoc::get_string_array(const std::string& key) const {
  const TomlValue& v = raw(key);
  if (v.kind != TomlValue::Kind::kArray)
    throw std::invalid_argument("config: key '" + key + "' must be an array");
  std::vector<std::string> out;
  for (const TomlValue& item : v.array) {
    if (item.kind != TomlValue::Kind::kString)
      throw std::invalid_argument("config: key '" + key + "' must hold strings");
    out.push_back(item.str);
  }
  return out;
}

std::string TomlDoc::get_string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
std::int64_t TomlDoc::get_int_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}
double TomlDoc::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
bool TomlDoc::get_bool_or(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

void TomlDoc::check_all_consumed() const {
  for (const auto& [key, value] : values_)
    if (!consumed_.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
}

const char* family_name(AlgorithmFamily family) {
  switch (family) {
    case AlgorithmFamily::kNpgRkl: return "npg_rkl";
    case AlgorithmFamily::kSpmaRkl: return "spma_rkl";
    case AlgorithmFamily::kNpgFkl: return "npg_fkl";
    case AlgorithmFamily::kSpmaFkl: return "spma_fkl";
    case AlgorithmFamily::kDsac: return "dsac";
  }
  return "?";
}

std::string RunConfig::derived_run_id() const {
  if (!run_id.empty()) return run_id;
  std::ostringstream os;
  os << family_name(family) << "-" << (mode == RunMode::kExact ? "exact" : "sampled") << "-"
     << env.name << "-s" << seed;
  return os.str();
}

namespace {

AlgorithmFamily parse_family(const std::string& s) {
  if (s == "npg_rkl") return AlgorithmFamily::kNpgRkl;
  if (s == "spma_rkl") return AlgorithmFamily::kSpmaRkl;
  if (s == "npg_fkl") return AlgorithmFamily::kNpgFkl;
  if (s == "spma_fkl") return AlgorithmFamily::kSpmaFkl;
  if (s == "dsac") return AlgorithmFamily::kDsac;
  throw std::invalid_argument("config: unknown family '" + s + "'");
}

}  // namespace

EnvSpec parse_env_spec(const TomlDoc& doc) {
  EnvSpec env;
  env.name = doc.get_string("env.name");
  if (env.name == "garnet") {
    env.num_states = static_cast<int>(doc.get_int_or("env.num_states", env.num_states));
    env.num_actions = static_cast<int>(doc.get_int_or("env.num_actions", env.num_actions));
    env.branching = static_cast<int>(doc.get_int_or("env.branching", env.branching));
    env.gamma = doc.get_double_or("env.gamma", env.gamma);
  } else if (env.name == "chain") {
    env.length = static_cast<int>(doc.get_int_or("env.length", env.length));
    env.slip = doc.get_double_or("env.slip", env.slip);
    env.gamma = doc.get_double_or("env.gamma", 0.99);
  } else if (env.name == "gridworld") {
    env.width = static_cast<int>(doc.get_int_or("env.width", env.width));
    env.height = static_cast<int>(doc.get_int_or("env.height", env.height));
    env.goal_row = static_cast<int>(doc.get_int_or("env.goal_row", env.goal_row));
    env.goal_col = static_cast<int>(doc.get_int_or("env.goal_col", env.goal_col));
    if (doc.has("env.obstacles")) env.obstacles = doc.get_int_array("env.obstacles");
    env.step_reward = doc.get_double_or("env.step_reward", env.step_reward);
    env.goal_reward = doc.get_double_or("env.goal_reward", env.goal_reward);
    env.gamma = doc.get_double_or("env.gamma", 0.99);
  } else if (env.name == "json") {
    env.path = doc.get_string("env.path");
  } else {
    throw std::invalid_argument("config: unknown env '" + env.name + "'");
  }
  if (doc.has("env.seed")) {
    env.env_seed = static_cast<std::uint64_t>(doc.get_int("env.seed"));
    env.env_seed_from_run = false;
  }
  return env;
}

RunConfig parse_run_config(const std::string& toml_text) {
  const TomlDoc doc = TomlDoc::parse(toml_text);
  RunConfig cfg;
  cfg.env = parse_env_spec(doc);

  cfg.family = parse_family(doc.get_string("run.family"));
  const std::string mode = doc.get_string_or("run.mode", "exact");
  if (mode == "exact")
    cfg.mode = RunMode::kExact;
  else if (mode == "sampled")
    cfg.mode = RunMode::kSampled;
  else
    throw std::invalid_argument("config: unknown mode '" + mode + "'");

  if (doc.has("run.tau") && doc.raw("run.tau").kind == TomlValue::Kind::kString) {
    if (doc.get_string("run.tau") != "auto")
      throw std::invalid_argument("config: run.tau must be a number or \"auto\"");
    cfg.tau_auto = true;
  } else {
    cfg.tau = doc.get_double_or("run.tau", cfg.tau);
    if (cfg.tau < 0.0) throw std::invalid_argument("config: run.tau must be nonnegative");
  }
  if (doc.has("run.zeta") && doc.raw("run.zeta").kind == TomlValue::Kind::kString) {
    if (doc.get_string("run.zeta") != "coupled")
      throw std::invalid_argument("config: run.zeta must be a number or \"coupled\"");
    cfg.zeta_coupled = true;
  } else {
    cfg.zeta = doc.get_double_or("run.zeta", cfg.zeta);
    if (cfg.zeta < 0.0) throw std::invalid_argument("config: run.zeta must be nonnegative");
  }
  cfg.iterations = static_cast<int>(doc.get_int_or("run.iterations", cfg.iterations));
  if (cfg.iterations < 0) throw std::invalid_argument("config: run.iterations must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(doc.get_int_or("run.seed", 0));
  cfg.run_id = doc.get_string_or("run.id", "");

  const std::string sched = doc.get_string_or("schedule.mode", "theory_decay");
  if (sched == "theory_decay")
    cfg.schedule.mode = ScheduleMode::kTheoryDecay;
  else if (sched == "constant")
    cfg.schedule.mode = ScheduleMode::kConstant;
  else
    throw std::invalid_argument("config: unknown schedule mode '" + sched + "'");
  cfg.schedule.c = doc.get_double_or("schedule.c", 0.0);
  cfg.schedule.eta_const = doc.get_double_or("schedule.eta", 0.0);
  // schedule.tau is filled in by the harness from the run's actor tau.

  if (doc.has("critic.m_steps") && doc.raw("critic.m_steps").kind == TomlValue::Kind::kString) {
    if (doc.get_string("critic.m_steps") != "infinite")
      throw std::invalid_argument("config: critic.m_steps must be a positive integer or \"infinite\"");
    cfg.m_steps = kInfiniteSteps;
  } else {
    cfg.m_steps = static_cast<int>(doc.get_int_or("critic.m_steps", cfg.m_steps));
    if (cfg.m_steps < 1)
      throw std::invalid_argument("config: critic.m_steps must be a positive integer or \"infinite\"");
  }
  cfg.clamp_output = doc.get_bool_or("critic.clamp_output", cfg.mode == RunMode::kExact);
  cfg.clamp_targets = doc.get_bool_or("critic.clamp_targets", false);
  cfg.mc_targets = doc.get_bool_or("critic.mc_targets", false);
  cfg.critic_lr = doc.get_double_or("critic.lr", cfg.critic_lr);
  cfg.critic_steps = static_cast<int>(doc.get_int_or("critic.steps", cfg.critic_steps));
  cfg.target_smoothing = doc.get_double_or("critic.target_smoothing", cfg.target_smoothing);
  if (cfg.target_smoothing <= 0.0 || cfg.target_smoothing > 1.0)
    throw std::invalid_argument("config: critic.target_smoothing must lie in (0, 1]");

  const std::string impl = doc.get_string_or("actor.impl", "closed_form");
  if (impl == "closed_form")
    cfg.actor_impl = ActorImpl::kClosedForm;
  else if (impl == "inner_loop")
    cfg.actor_impl = ActorImpl::kInnerLoop;
  else
    throw std::invalid_argument("config: unknown actor.impl '" + impl + "'");
  cfg.inner_steps = static_cast<int>(doc.get_int_or("actor.inner_steps", cfg.inner_steps));
  cfg.inner_step_size = doc.get_double_or("actor.inner_step_size", cfg.inner_step_size);
  cfg.backtracking = doc.get_bool_or("actor.backtracking", cfg.backtracking);
  cfg.inner_grad_tol = doc.get_double_or("actor.inner_grad_tol", cfg.inner_grad_tol);
  cfg.fkl_tol = doc.get_double_or("actor.fkl_tol", cfg.fkl_tol);
  cfg.fkl_max_iterations =
      static_cast<int>(doc.get_int_or("actor.fkl_max_iterations", cfg.fkl_max_iterations));

  const bool has_sampled_keys =
      doc.has("sampled.env_steps_per_iter") || doc.has("sampled.batch_size") ||
      doc.has("sampled.buffer_capacity") || doc.has("sampled.max_episode_len") ||
      doc.has("sampled.prefill_steps");
  if (cfg.mode == RunMode::kExact && has_sampled_keys)
    throw std::invalid_argument("config: exact mode forbids [sampled] keys");
  if (cfg.mode == RunMode::kSampled) {
    if (!doc.has("sampled.env_steps_per_iter") || !doc.has("sampled.batch_size") ||
        !doc.has("sampled.buffer_capacity"))
      throw std::invalid_argument(
          "config: sampled mode requires sampled.env_steps_per_iter, sampled.batch_size and "
          "sampled.buffer_capacity");
    cfg.env_steps_per_iter = static_cast<int>(doc.get_int("sampled.env_steps_per_iter"));
    cfg.batch_size = static_cast<int>(doc.get_int("sampled.batch_size"));
    cfg.buffer_capacity = static_cast<int>(doc.get_int("sampled.buffer_capacity"));
    cfg.max_episode_len =
        static_cast<int>(doc.get_int_or("sampled.max_episode_len", cfg.max_episode_len));
    cfg.prefill_steps = static_cast<int>(doc.get_int_or("sampled.prefill_steps", 0));
    if (cfg.env_steps_per_iter < 0 || cfg.batch_size < 1 || cfg.buffer_capacity < 1)
      throw std::invalid_argument("config: invalid sampled-mode sizes");
  }

  const bool has_tuner = doc.has("tuner.lr") || doc.has("tuner.target_entropy_scale") ||
                         doc.has("tuner.init_alpha");
  if (cfg.tau_auto && !has_tuner)
    throw std::invalid_argument("config: tau = \"auto\" requires a [tuner] section");
  cfg.target_entropy_scale =
      doc.get_double_or("tuner.target_entropy_scale", cfg.target_entropy_scale);
  cfg.tuner_lr = doc.get_double_or("tuner.lr", cfg.tuner_lr);
  cfg.init_alpha = doc.get_double_or("tuner.init_alpha", cfg.init_alpha);
  if (cfg.init_alpha <= 0.0) throw std::invalid_argument("config: tuner.init_alpha must be > 0");

  cfg.store_policies = doc.get_bool_or("diagnostics.store_policies", cfg.store_policies);
  cfg.store_q = doc.get_bool_or("diagnostics.store_q", cfg.store_q);
  cfg.exact_reference = doc.get_bool_or("diagnostics.exact_reference", cfg.exact_reference);
  cfg.greedy_eval = doc.get_bool_or("diagnostics.greedy_eval", cfg.greedy_eval);
  cfg.solve_tol = doc.get_double_or("diagnostics.solve_tol", cfg.solve_tol);

  if (cfg.family == AlgorithmFamily::kDsac && !cfg.tau_auto && cfg.tau <= 0.0)
    throw std::invalid_argument("config: dsac requires tau > 0 or tau = \"auto\"");
  if (cfg.zeta_coupled && !cfg.tau_auto)
    throw std::invalid_argument("config: zeta = \"coupled\" requires tau = \"auto\"");

  doc.check_all_consumed();
  return cfg;
}

Mdp build_env(const EnvSpec& spec, std::uint64_t run_seed) {
  const std::uint64_t seed = spec.env_seed_from_run ? run_seed : spec.env_seed;
  if (spec.name == "garnet")
    return garnet(spec.num_states, spec.num_actions, spec.branching, spec.gamma, seed);
  if (spec.name == "chain") return chain_mdp(spec.length, spec.slip, spec.gamma);
  if (spec.name == "gridworld") {
    if (spec.obstacles.size() % 2 != 0)
      throw std::invalid_argument("gridworld: obstacles must be flat (row, col) pairs");
    std::vector<Cell> cells;
    for (std::size_t i = 0; i + 1 < spec.obstacles.size(); i += 2)
      cells.push_back(Cell{static_cast<int>(spec.obstacles[i]),
                           static_cast<int>(spec.obstacles[i + 1])});
    return gridworld(spec.width, spec.height, Cell{spec.goal_row, spec.goal_col}, cells,
                     spec.step_reward, spec.goal_reward, spec.gamma);
  }
  if (spec.name == "json") {
    std::ifstream in(spec.path);
    if (!in) throw std::invalid_argument("env: cannot open '" + spec.path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return mdp_from_json(buf.str());
  }
  throw std::invalid_argument("env: unknown environment '" + spec.name + "'");
}

VerifyConfig parse_verify_config(const std::string& toml_text) {
  const TomlDoc doc = TomlDoc::parse(toml_text);
  VerifyConfig cfg;
  if (doc.has("verify.suites")) cfg.suites = doc.get_string_array("verify.suites");
  if (doc.has("verify.seeds")) {
    cfg.seeds.clear();
    for (std::int64_t s : doc.get_int_array("verify.seeds"))
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  cfg.c_npg = doc.get_double_or("verify.c_npg", -1.0);
  cfg.c_spma = doc.get_double_or("verify.c_spma", -1.0);
  doc.check_all_consumed();
  return cfg;
}

}  // namespace softac
