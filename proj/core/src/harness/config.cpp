#include "evor/harness/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "evor/env.hpp"

namespace evor::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v[0] == '-')
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F&& conv) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<T>(conv(key, trim(item))));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define EVOR_INT(name)                                                                      \
  {#name, {[](ExperimentConfig& c, const std::string& v) {                                  \
             c.name = static_cast<decltype(c.name)>(to_int(#name, v));                      \
           },                                                                                \
           [](const ExperimentConfig& c) { return std::to_string(c.name); }}}
#define EVOR_DOUBLE(name)                                                                    \
  {#name, {[](ExperimentConfig& c, const std::string& v) { c.name = to_double(#name, v); }, \
           [](const ExperimentConfig& c) { return fmt(c.name); }}}
#define EVOR_BOOL(name)                                                                    \
  {#name, {[](ExperimentConfig& c, const std::string& v) { c.name = to_bool(#name, v); }, \
           [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); }}}
#define EVOR_STRING(name)                                                      \
  {#name, {[](ExperimentConfig& c, const std::string& v) { c.name = v; },     \
           [](const ExperimentConfig& c) { return c.name; }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = {
      {"seed", {[](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
                [](const ExperimentConfig& c) { return std::to_string(c.seed); }}},
      EVOR_STRING(env),
      EVOR_STRING(dataset),
      EVOR_INT(n_traj),
      {"data_seed",
       {[](ExperimentConfig& c, const std::string& v) {
          if (v == "auto")
            c.data_seed.reset();
          else
            c.data_seed = to_u64("data_seed", v);
        },
        [](const ExperimentConfig& c) {
          return c.data_seed ? std::to_string(*c.data_seed) : std::string("auto");
        }}},
      {"ref_weights",
       {[](ExperimentConfig& c, const std::string& v) { c.ref_weights = to_list<double>("ref_weights", v, to_double); },
        [](const ExperimentConfig& c) { return join(c.ref_weights); }}},
      EVOR_STRING(algorithm),
      {"policy_hidden",
       {[](ExperimentConfig& c, const std::string& v) { c.policy_hidden = to_list<int>("policy_hidden", v, to_int); },
        [](const ExperimentConfig& c) { return join(c.policy_hidden); }}},
      {"critic_hidden",
       {[](ExperimentConfig& c, const std::string& v) { c.critic_hidden = to_list<int>("critic_hidden", v, to_int); },
        [](const ExperimentConfig& c) { return join(c.critic_hidden); }}},
      EVOR_STRING(activation),
      EVOR_BOOL(policy_layer_norm),
      EVOR_BOOL(critic_layer_norm),
      EVOR_BOOL(sinusoidal_time),
      EVOR_DOUBLE(lr),
      EVOR_INT(batch_size),
      EVOR_INT(steps),
      {"gamma",
       {[](ExperimentConfig& c, const std::string& v) {
          if (v == "auto")
            c.gamma.reset();
          else
            c.gamma = to_double("gamma", v);
        },
        [](const ExperimentConfig& c) { return c.gamma ? fmt(*c.gamma) : std::string("auto"); }}},
      EVOR_DOUBLE(polyak),
      EVOR_INT(euler_steps),
      EVOR_INT(n_candidates),
      EVOR_INT(n_rtg_train),
      EVOR_INT(n_rtg_eval),
      EVOR_DOUBLE(tau_r),
      EVOR_DOUBLE(tau_q),
      EVOR_STRING(selection),
      EVOR_STRING(rtg_source),
      EVOR_STRING(td_target),
      EVOR_STRING(bootstrap_action),
      EVOR_INT(next_action_samples),
      EVOR_DOUBLE(return_scale),
      EVOR_INT(qc_chunk),
      EVOR_INT(qc_bootstrap_candidates),
      EVOR_INT(eval_interval),
      EVOR_INT(eval_episodes),
  };
  return f;
}

#undef EVOR_INT
#undef EVOR_DOUBLE
#undef EVOR_BOOL
#undef EVOR_STRING

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& [name, _] : fields()) k.push_back(name);
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, value);
}

double ExperimentConfig::resolved_gamma() const {
  return gamma ? *gamma : make_env(env)->default_gamma();
}

void ExperimentConfig::validate() const {
  const auto ids = env_ids();
  if (std::find(ids.begin(), ids.end(), env) == ids.end()) throw ConfigError("unknown env '" + env + "'");
  if (n_traj < 1) throw ConfigError("n_traj must be >= 1");
  RefPolicySpec{ref_weights}.validate(make_env(env)->num_ref_components());
  if (algorithm != "evor" && algorithm != "qc") throw ConfigError("algorithm must be evor or qc");
  for (int w : policy_hidden)
    if (w < 1) throw ConfigError("policy_hidden widths must be >= 1");
  for (int w : critic_hidden)
    if (w < 1) throw ConfigError("critic_hidden widths must be >= 1");
  nn::activation_from_string(activation);
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (gamma && !(*gamma >= 0.0 && *gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(polyak >= 0.0 && polyak <= 1.0)) throw ConfigError("polyak must lie in [0, 1]");
  if (euler_steps < 1) throw ConfigError("euler_steps must be >= 1");
  if (n_candidates < 1) throw ConfigError("n_candidates must be >= 1");
  if (n_rtg_train < 1) throw ConfigError("n_rtg_train must be >= 1");
  if (n_rtg_eval < 1) throw ConfigError("n_rtg_eval must be >= 1");
  if (!(tau_r > 0.0)) throw ConfigError("tau_r must be positive");
  if (!(tau_q > 0.0)) throw ConfigError("tau_q must be positive");
  if (selection != "softmax" && selection != "argmax") throw ConfigError("selection must be softmax or argmax");
  rtg_source_from_string(rtg_source);
  td_target_from_string(td_target);
  bootstrap_action_from_string(bootstrap_action);
  if (next_action_samples < 1) throw ConfigError("next_action_samples must be >= 1");
  if (!(return_scale > 0.0)) throw ConfigError("return_scale must be positive");
  if (qc_chunk < 1) throw ConfigError("qc_chunk must be >= 1");
  if (qc_bootstrap_candidates < 1) throw ConfigError("qc_bootstrap_candidates must be >= 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(*this) + "\n";
  return out;
}

PolicyConfig ExperimentConfig::policy_config(int act_chunk) const {
  PolicyConfig p;
  p.hidden = policy_hidden;
  p.activation = nn::activation_from_string(activation);
  p.layer_norm = policy_layer_norm;
  p.sinusoidal_time = sinusoidal_time;
  p.euler_steps = euler_steps;
  p.chunk = act_chunk;
  p.adam.lr = lr;
  return p;
}

CriticConfig ExperimentConfig::critic_config() const {
  CriticConfig c;
  c.hidden = critic_hidden;
  c.activation = nn::activation_from_string(activation);
  c.layer_norm = critic_layer_norm;
  c.sinusoidal_time = sinusoidal_time;
  c.gamma = resolved_gamma();
  c.polyak = polyak;
  c.euler_steps = euler_steps;
  c.rtg_source = rtg_source_from_string(rtg_source);
  c.td_target = td_target_from_string(td_target);
  c.bootstrap_action = bootstrap_action_from_string(bootstrap_action);
  c.next_action_samples = next_action_samples;
  c.return_scale = return_scale;
  c.adam.lr = lr;
  return c;
}

QcConfig ExperimentConfig::qc_config() const {
  QcConfig q;
  q.hidden = critic_hidden;
  q.activation = nn::activation_from_string(activation);
  q.layer_norm = critic_layer_norm;
  q.gamma = resolved_gamma();
  q.polyak = polyak;
  q.chunk = qc_chunk;
  q.bootstrap_candidates = qc_bootstrap_candidates;
  q.adam.lr = lr;
  return q;
}

ExtractionConfig ExperimentConfig::extraction_config() const {
  ExtractionConfig e;
  e.n_candidates = n_candidates;
  e.n_rtg = n_rtg_eval;
  e.tau_r = tau_r;
  e.tau_q = tau_q;
  e.selection = selection == "argmax" ? Selection::argmax : Selection::softmax;
  return e;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace evor::harness
