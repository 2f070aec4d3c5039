// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtraj/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace qtraj {
namespace {

enum class Kind { integer, seed, real, complex, text, list, real_or_auto, integer_or_auto };

struct KeySpec {
  const char* name;
  Kind kind;
  const char* fallback;  // nullptr: mandatory
  const char* builders;  // builders that accept the key; "*" for all
  std::vector<std::string> choices = {};
};

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"model.builder", Kind::text, nullptr, "*", {"thermal", "kerr", "monitored"}},
      {"model.dim", Kind::integer, "30", "*"},
      {"model.p", Kind::integer, "4", "thermal,kerr"},
      {"model.rate", Kind::real, "1", "thermal"},
      {"model.nu", Kind::real, "0.5", "thermal"},
      {"model.omega", Kind::real, "0", "thermal"},
      {"model.beta1", Kind::real, "0", "kerr"},
      {"model.beta2", Kind::real, "0", "kerr"},
      {"model.beta3", Kind::real, "0", "kerr"},
      {"model.alpha1", Kind::complex, "0", "kerr"},
      {"model.alpha2", Kind::complex, "0", "kerr"},
      {"model.alpha3", Kind::complex, "0", "kerr"},
      {"model.alpha4", Kind::complex, "0", "kerr"},
      {"model.alpha5", Kind::complex, "0", "kerr"},
      {"model.alpha6", Kind::complex, "0", "kerr"},
      {"model.mass", Kind::real, "1", "monitored"},
      {"model.c", Kind::real, "0", "monitored"},
      {"model.alpha", Kind::real, "0", "monitored"},
      {"model.beta", Kind::real, "0", "monitored"},
      {"run.kind", Kind::text, "linear", "*", {"linear", "nonlinear", "both"}},
      {"run.M", Kind::integer, "1000", "*"},
      {"run.dt", Kind::real, "0.001", "*"},
      {"run.t_end", Kind::real, "1", "*"},
      {"run.save_every", Kind::integer_or_auto, "auto", "*"},
      {"run.base_seed", Kind::seed, nullptr, "*"},
      {"run.initial", Kind::text, "fock:0", "*"},
      {"run.observables", Kind::list, "N", "*"},
      {"run.threads", Kind::integer, "1", "*"},
      {"tasks.list", Kind::list, nullptr, "*"},
      {"output.dir", Kind::text, "out", "*"},
      {"ehrenfest.dt", Kind::real, "0.001", "monitored"},
      {"equivalence.t", Kind::real_or_auto, "auto", "*"},
      {"dissipativity.kind", Kind::text, "hyp61", "*", {"nonexplosion_i2", "hyp61"}},
      {"dissipativity.probes", Kind::integer, "64", "*"},
      {"stationary.burn_in", Kind::real_or_auto, "auto", "*"},
      {"stationary.window", Kind::real, "20", "*"},
      {"stationary.stride", Kind::real_or_auto, "auto", "*"},
      {"stationary.M", Kind::integer, "500", "*"},
      {"picard.t", Kind::real, "0.5", "*"},
      {"picard.iters", Kind::integer, "8", "*"},
      {"picard.quad_points", Kind::integer, "33", "*"},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<long long> to_int(const std::string& s) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_seed(const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> to_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<Complex> to_complex(const std::string& s) {
  if (auto r = to_real(s)) return Complex(*r, 0.0);
  if (s.size() < 5 || s.front() != '(' || s.back() != ')') return std::nullopt;
  const auto parts = split_list(s.substr(1, s.size() - 2));
  if (parts.size() != 2) return std::nullopt;
  const auto re = to_real(parts[0]), im = to_real(parts[1]);
  if (!re || !im) return std::nullopt;
  return Complex(*re, *im);
}

bool builder_accepts(const KeySpec& k, const std::string& builder) {
  if (std::string(k.builders) == "*") return true;
  for (const auto& b : split_list(k.builders))
    if (b == builder) return true;
  return false;
}

std::optional<Task> parse_task(const std::string& name) {
  for (Task t : task_order())
    if (name == to_string(t)) return t;
  return std::nullopt;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
        std::string s = "invalid config:";
        for (const auto& e : errors) s += "\n  " + e;
        return s;
      }()),
      errors_(std::move(errors)) {}

const char* to_string(Task task) {
  switch (task) {
    case Task::master_oracle: return "master_oracle";
    case Task::heisenberg_oracle: return "heisenberg_oracle";
    case Task::ensemble: return "ensemble";
    case Task::duality: return "duality";
    case Task::ehrenfest: return "ehrenfest";
    case Task::equivalence: return "equivalence";
    case Task::regularity: return "regularity";
    case Task::dissipativity: return "dissipativity";
    case Task::stationary: return "stationary";
    case Task::picard: return "picard";
  }
  return "?";
}

const std::vector<Task>& task_order() {
  static const std::vector<Task> order = {Task::master_oracle, Task::heisenberg_oracle, Task::duality,
                                          Task::ehrenfest,     Task::picard,            Task::ensemble,
                                          Task::regularity,    Task::equivalence,       Task::dissipativity,
                                          Task::stationary};
  return order;
}

bool RunConfig::has_task(Task t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

std::string RunConfig::canonical_text() const {
  std::string s;
  for (const auto& [k, v] : values) s += k + " = " + v + "\n";
  return s;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const std::string& text) {
  std::vector<std::string> errors;
  std::map<std::string, std::pair<std::string, int>> raw;

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected 'section.key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": key '" + key + "' must have the form section.key");
      continue;
    }
    const bool known = std::any_of(schema().begin(), schema().end(), [&](const KeySpec& k) { return key == k.name; });
    if (!known) {
      errors.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      continue;
    }
    if (auto it = raw.find(key); it != raw.end()) {
      errors.push_back("duplicate key '" + key + "' on lines " + std::to_string(it->second.second) + " and " +
                       std::to_string(lineno));
      continue;
    }
    raw[key] = {value, lineno};
  }

  RunConfig cfg;
  const std::string builder = raw.count("model.builder") ? raw["model.builder"].first : "";

  for (const auto& k : schema()) {
    auto it = raw.find(k.name);
    std::string value;
    const std::string where = it != raw.end() ? "line " + std::to_string(it->second.second) + ": " : "";
    if (it == raw.end()) {
      if (!k.fallback) {
        errors.push_back(std::string("missing mandatory key '") + k.name + "'");
        continue;
      }
      if (!builder_accepts(k, builder)) continue;
      value = k.fallback;
      cfg.defaults_applied.push_back(k.name);
    } else {
      value = it->second.first;
      if (!builder.empty() && !builder_accepts(k, builder)) {
        errors.push_back(where + "key '" + std::string(k.name) + "' does not apply to builder '" + builder + "'");
        continue;
      }
    }
    bool ok = true;
    switch (k.kind) {
      case Kind::integer: ok = to_int(value).has_value(); break;
      case Kind::seed: ok = to_seed(value).has_value(); break;
      case Kind::real: ok = to_real(value).has_value(); break;
      case Kind::complex: ok = to_complex(value).has_value(); break;
      case Kind::real_or_auto: ok = value == "auto" || to_real(value).has_value(); break;
      case Kind::integer_or_auto: ok = value == "auto" || to_int(value).has_value(); break;
      case Kind::list: ok = !split_list(value).empty(); break;
      case Kind::text:
        ok = !value.empty() && (k.choices.empty() || std::find(k.choices.begin(), k.choices.end(), value) != k.choices.end());
        break;
    }
    if (!ok) {
      std::string expected;
      switch (k.kind) {
        case Kind::integer: expected = "an integer"; break;
        case Kind::seed: expected = "an unsigned 64-bit integer"; break;
        case Kind::real: expected = "a real number"; break;
        case Kind::complex: expected = "a real number or (re,im)"; break;
        case Kind::real_or_auto: expected = "a real number or 'auto'"; break;
        case Kind::integer_or_auto: expected = "an integer or 'auto'"; break;
        case Kind::list: expected = "a comma-separated list"; break;
        case Kind::text:
          expected = "one of";
          for (const auto& c : k.choices) expected += " " + c;
          if (k.choices.empty()) expected = "a non-empty string";
          break;
      }
      errors.push_back(where + "key '" + std::string(k.name) + "' = '" + value + "' is not " + expected);
      continue;
    }
    cfg.values[k.name] = value;
  }
  if (!errors.empty()) throw ConfigError(errors);

  auto& v = cfg.values;
  auto geti = [&](const char* k) { return static_cast<int>(*to_int(v[k])); };
  auto getr = [&](const char* k) { return *to_real(v[k]); };

  ModelConfig& mc = cfg.model;
  mc.builder = builder;
  mc.dim = geti("model.dim");
  if (mc.builder != "monitored") mc.p = geti("model.p");
  if (mc.builder == "thermal") {
    mc.rate = getr("model.rate");
    mc.nu = getr("model.nu");
    mc.omega = getr("model.omega");
  } else if (mc.builder == "kerr") {
    mc.kerr.beta1 = getr("model.beta1");
    mc.kerr.beta2 = getr("model.beta2");
    mc.kerr.beta3 = getr("model.beta3");
    for (int k = 0; k < 6; ++k) mc.kerr.alpha[k] = *to_complex(v["model.alpha" + std::to_string(k + 1)]);
    mc.kerr.p = mc.p;
  } else {
    mc.monitored = {getr("model.mass"), getr("model.c"), getr("model.alpha"), getr("model.beta")};
  }
  if (mc.dim < 8) errors.push_back("model.dim must be >= 8");
  if (mc.builder != "monitored" && mc.p < 1) errors.push_back("model.p must be >= 1");
  if (mc.builder == "monitored" && !(mc.monitored.m > 0)) errors.push_back("model.mass must be > 0");

  RunSection& rs = cfg.run;
  rs.kind_text = v["run.kind"];
  if (rs.kind_text == "both") rs.kinds = {SseKind::linear, SseKind::nonlinear};
  else rs.kinds = {parse_kind(rs.kind_text)};
  const int m = geti("run.M");
  if (m < 1) errors.push_back("run.M must be >= 1");
  rs.M = static_cast<std::size_t>(std::max(1, m));
  rs.dt = getr("run.dt");
  rs.t_end = getr("run.t_end");
  rs.base_seed = *to_seed(v["run.base_seed"]);
  rs.initial = v["run.initial"];
  rs.observables = split_list(v["run.observables"]);
  rs.threads = geti("run.threads");
  if (rs.threads < 1) errors.push_back("run.threads must be >= 1");
  try {
    if (v["run.save_every"] == "auto") {
      rs.save_every = TimeGrid::with_save_limit(rs.t_end, rs.dt).save_every();
      v["run.save_every"] = std::to_string(rs.save_every);
    } else {
      rs.save_every = geti("run.save_every");
      (void)TimeGrid(rs.t_end, rs.dt, rs.save_every);
    }
  } catch (const std::exception& e) {
    errors.push_back(std::string("run grid: ") + e.what());
  }
  try {
    const FockSpace space(std::max(2, mc.dim));
    (void)build_initial_state(space, rs.initial);
    for (const auto& o : rs.observables) (void)build_observable(space, o);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }

  std::vector<Task> requested;
  for (const auto& name : split_list(v["tasks.list"])) {
    if (auto t = parse_task(name)) requested.push_back(*t);
    else errors.push_back("unknown task '" + name + "'");
  }
  for (Task t : task_order())
    if (std::find(requested.begin(), requested.end(), t) != requested.end()) cfg.tasks.push_back(t);
  cfg.output_dir = v["output.dir"];

  if (cfg.has_task(Task::ehrenfest)) {
    if (mc.builder != "monitored") errors.push_back("task 'ehrenfest' requires model.builder = monitored");
    else cfg.ehrenfest_dt = getr("ehrenfest.dt");
  }
  if (cfg.has_task(Task::equivalence) && rs.kind_text != "both") {
    errors.push_back(std::string("task 'equivalence' requires both a linear and a nonlinear run, but run.kind = ") +
                     rs.kind_text + " has no " + (rs.kind_text == "linear" ? "nonlinear" : "linear") +
                     " run (set run.kind = both)");
  }
  if (cfg.has_task(Task::regularity) && !cfg.has_task(Task::ensemble))
    errors.push_back("task 'regularity' requires task 'ensemble'");
  if (cfg.has_task(Task::duality) && rs.observables.empty()) errors.push_back("task 'duality' needs an observable");
  if (v["equivalence.t"] == "auto") {
    cfg.equivalence_t = rs.t_end;
    v["equivalence.t"] = v["run.t_end"];
  } else {
    cfg.equivalence_t = getr("equivalence.t");
  }
  cfg.dissipativity_kind = parse_inequality_kind(v["dissipativity.kind"]);
  cfg.dissipativity_probes = geti("dissipativity.probes");
  if (cfg.dissipativity_probes < 1) errors.push_back("dissipativity.probes must be >= 1");
  if (v["stationary.burn_in"] != "auto") cfg.stationary_burn_in = getr("stationary.burn_in");
  else if (cfg.has_task(Task::stationary) && mc.dim > 32)
    errors.push_back("stationary.burn_in = auto needs model.dim <= 32; set it explicitly");
  cfg.stationary_window = getr("stationary.window");
  if (v["stationary.stride"] != "auto") cfg.stationary_stride = getr("stationary.stride");
  cfg.stationary_M = static_cast<std::size_t>(std::max(1, geti("stationary.M")));
  cfg.picard_t = getr("picard.t");
  cfg.picard_iters = geti("picard.iters");
  cfg.picard_quad_points = geti("picard.quad_points");
  if (cfg.picard_quad_points < 3) errors.push_back("picard.quad_points must be >= 3");

  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

ModelSpec build_model(const ModelConfig& mc) {
  const FockSpace space(mc.dim);
  if (mc.builder == "thermal") return build_thermal_oscillator(space, mc.rate, mc.nu, mc.omega, mc.p);
  if (mc.builder == "kerr") return build_kerr_oscillator(space, mc.kerr);
  if (mc.builder == "monitored") return build_monitored_oscillator(space, mc.monitored);
  throw std::invalid_argument("unknown model builder '" + mc.builder + "'");
}

PureState build_initial_state(const FockSpace& space, const std::string& spec) {
  if (spec.rfind("fock:", 0) == 0) {
    const auto n = to_int(spec.substr(5));
    if (!n || *n < 0 || *n >= space.dim()) throw std::invalid_argument("run.initial: bad Fock index in '" + spec + "'");
    return PureState(space.basis(static_cast<int>(*n)));
  }
  if (spec.rfind("coherent:", 0) == 0) {
    const auto parts = split_list(spec.substr(9));
    std::optional<double> re = parts.size() >= 1 ? to_real(parts[0]) : std::nullopt;
    std::optional<double> im = parts.size() == 2 ? to_real(parts[1]) : std::optional<double>(0.0);
    if (!re || !im || parts.size() > 2) throw std::invalid_argument("run.initial: bad coherent amplitude in '" + spec + "'");
    const Complex amp(*re, *im);
    Vector v(space.dim());
    Complex c = 1.0;
    for (int n = 0; n < space.dim(); ++n) {
      v(n) = c;
      c *= amp / std::sqrt(static_cast<double>(n + 1));
    }
    return PureState::normalized(v);
  }
  throw std::invalid_argument("run.initial: expected fock:<n> or coherent:<re>[,<im>], got '" + spec + "'");
}

Op build_observable(const FockSpace& space, const std::string& name) {
  const auto f = build_fock_ops(space);
  if (name == "N") return f.n;
  if (name == "Q") return f.q;
  if (name == "P") return f.p;
  if (name == "I") return {identity(space.dim()), "I"};
  if (name == "N2") return {f.n.matrix * f.n.matrix, "N2"};
  throw std::invalid_argument("unknown observable '" + name + "' (expected N, Q, P, I or N2)");
}

}  // namespace qtraj
