#include "dicke/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace dicke {

const char* to_string(TimeUnit unit) {
  switch (unit) {
    case TimeUnit::Omega0: return "omega0";
    case TimeUnit::RabiRate: return "q";
    case TimeUnit::Microseconds: return "us";
  }
  return "?";
}

TimeUnit parse_time_unit(const std::string& name) {
  if (name == "omega0") return TimeUnit::Omega0;
  if (name == "q") return TimeUnit::RabiRate;
  if (name == "us") return TimeUnit::Microseconds;
  fail(ErrorKind::Configuration, "unknown time unit '" + name + "' (expected omega0, q or us)");
}

SpaceSpec ScenarioConfig::space() const { return SpaceSpec(system.N, n_max, basis); }

RealisticParams ScenarioConfig::realistic() const {
  RealisticParams r;
  r.omega0 = system.omega0;
  r.Omega = qubit_Omega;
  r.g = qubit_g;
  r.with_crt = system.with_crt;
  return r;
}

StateVector ScenarioConfig::initial_state() const {
  const SpaceSpec collective(system.N, n_max);
  const StateVector psi = initial.kind == InitialKind::DickeFock
                              ? dicke_fock_state(collective, initial.k, initial.n)
                              : coherent_state(collective, std::sqrt(initial.alpha_squared), initial.k);
  return basis == BasisKind::Collective ? psi : embed_in_distinguishable(psi);
}

std::vector<ModulationSchedule> ScenarioConfig::driven_schedules() const {
  std::vector<ModulationSchedule> out = schedules;
  if (run.eta_factor) {
    const Real eta = *run.eta_factor * 2.0 * std::abs(system.detuning());
    for (auto& s : out) s.eta = eta;
  }
  return out;
}

void ScenarioConfig::validate() const {
  system.validate();
  (void)space();
  if (basis == BasisKind::Distinguishable) {
    const RealisticParams r = realistic();
    r.validate();
    require(r.N() == system.N, ErrorKind::PhysicsGuard, "qubit lists must have system.N entries");
    check_schedules(r, driven_schedules());
  } else {
    require(qubit_Omega.empty() && qubit_g.empty(), ErrorKind::Configuration,
            "per-qubit parameters need basis = distinguishable");
    check_schedules(system, driven_schedules());
  }
  if (dissipation) dissipation->validate(system.N);
  require(initial.alpha_squared >= 0.0, ErrorKind::PhysicsGuard, "alpha_squared must be non-negative");
  (void)initial_state();
  require(transition.k >= 0 && transition.k + 2 <= system.N && transition.n >= transition.k + 2,
          ErrorKind::PhysicsGuard, "transition must satisfy 0 <= k, k + 2 <= N and n >= k + 2");
  require(run.t_span >= 0.0, ErrorKind::Configuration, "run.t_span must be non-negative");
  require(run.samples >= 2, ErrorKind::Configuration, "run.samples must be at least 2");
  require(run.tol >= 1e-13 && run.tol <= 1e-6, ErrorKind::Configuration,
          "run.tol must lie in [1e-13, 1e-6]");
  if (run.eta_factor) require(*run.eta_factor > 0.0, ErrorKind::Configuration, "run.eta_factor must be positive");
  require(sweep.factor_lo > 0.0 && sweep.factor_hi > sweep.factor_lo, ErrorKind::Configuration,
          "sweep needs 0 < factor_lo < factor_hi");
  require(sweep.points >= 5, ErrorKind::Configuration, "sweep.points must be at least 5");
}

namespace {

struct Cursor {
  const std::string& origin;
  int line;
  int column;  // 1-based column of the value being read
};

[[noreturn]] void config_error(const Cursor& at, const std::string& message) {
  std::ostringstream os;
  os << at.origin << ':' << at.line << ':' << at.column << ": " << message;
  fail(ErrorKind::Configuration, os.str());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Real parse_real(const std::string& v, const Cursor& at) {
  Real x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) config_error(at, "expected a number, got '" + v + "'");
  return x;
}

int parse_int(const std::string& v, const Cursor& at) {
  int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) config_error(at, "expected an integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v, const Cursor& at) {
  if (v == "true") return true;
  if (v == "false") return false;
  config_error(at, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<Real> parse_reals(const std::string& v, const Cursor& at) {
  std::vector<Real> out;
  for (const auto& item : split_list(v)) out.push_back(parse_real(item, at));
  return out;
}

std::string format_real(Real x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format_reals(const std::vector<Real>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_real(xs[i]);
  return out;
}

DissipationRates& rates(ScenarioConfig& c) {
  if (!c.dissipation) c.dissipation.emplace();
  return *c.dissipation;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const Cursor&)>;

const std::map<std::string, Setter>& scalar_keys() {
  static const std::map<std::string, Setter> keys = {
      {"system.omega0", [](auto& c, auto& v, auto& at) { c.system.omega0 = parse_real(v, at); }},
      {"system.Omega0", [](auto& c, auto& v, auto& at) { c.system.Omega0 = parse_real(v, at); }},
      {"system.g0", [](auto& c, auto& v, auto& at) { c.system.g0 = parse_real(v, at); }},
      {"system.N", [](auto& c, auto& v, auto& at) { c.system.N = parse_int(v, at); }},
      {"system.crt", [](auto& c, auto& v, auto& at) { c.system.with_crt = parse_bool(v, at); }},
      {"system.n_max", [](auto& c, auto& v, auto& at) { c.n_max = parse_int(v, at); }},
      {"system.basis",
       [](auto& c, auto& v, auto& at) {
         if (v == "collective") c.basis = BasisKind::Collective;
         else if (v == "distinguishable") c.basis = BasisKind::Distinguishable;
         else config_error(at, "basis must be collective or distinguishable");
       }},
      {"system.qubit_Omega", [](auto& c, auto& v, auto& at) { c.qubit_Omega = parse_reals(v, at); }},
      {"system.qubit_g", [](auto& c, auto& v, auto& at) { c.qubit_g = parse_reals(v, at); }},
      {"dissipation.kappa",
       [](auto& c, auto& v, auto& at) { rates(c).kappa = parse_real(v, at); }},
      {"dissipation.gamma",
       [](auto& c, auto& v, auto& at) { rates(c).gamma = parse_reals(v, at); }},
      {"dissipation.gamma_phi",
       [](auto& c, auto& v, auto& at) { rates(c).gamma_phi = parse_reals(v, at); }},
      {"initial.kind",
       [](auto& c, auto& v, auto& at) {
         if (v == "dicke_fock") c.initial.kind = InitialKind::DickeFock;
         else if (v == "coherent") c.initial.kind = InitialKind::Coherent;
         else config_error(at, "initial.kind must be dicke_fock or coherent");
       }},
      {"initial.k", [](auto& c, auto& v, auto& at) { c.initial.k = parse_int(v, at); }},
      {"initial.n", [](auto& c, auto& v, auto& at) { c.initial.n = parse_int(v, at); }},
      {"initial.alpha_squared", [](auto& c, auto& v, auto& at) { c.initial.alpha_squared = parse_real(v, at); }},
      {"transition.n", [](auto& c, auto& v, auto& at) { c.transition.n = parse_int(v, at); }},
      {"transition.k", [](auto& c, auto& v, auto& at) { c.transition.k = parse_int(v, at); }},
      {"run.t_span", [](auto& c, auto& v, auto& at) { c.run.t_span = parse_real(v, at); }},
      {"run.unit",
       [](auto& c, auto& v, auto& at) {
         try {
           c.run.unit = parse_time_unit(v);
         } catch (const Error& e) {
           config_error(at, e.what());
         }
       }},
      {"run.samples", [](auto& c, auto& v, auto& at) { c.run.samples = parse_int(v, at); }},
      {"run.tol", [](auto& c, auto& v, auto& at) { c.run.tol = parse_real(v, at); }},
      {"run.eta_factor", [](auto& c, auto& v, auto& at) { c.run.eta_factor = parse_real(v, at); }},
      {"sweep.factor_lo", [](auto& c, auto& v, auto& at) { c.sweep.factor_lo = parse_real(v, at); }},
      {"sweep.factor_hi", [](auto& c, auto& v, auto& at) { c.sweep.factor_hi = parse_real(v, at); }},
      {"sweep.points", [](auto& c, auto& v, auto& at) { c.sweep.points = parse_int(v, at); }},
      {"sweep.zoom", [](auto& c, auto& v, auto& at) { c.sweep.zoom = parse_bool(v, at); }},
      {"outputs.observables", [](auto& c, auto& v, auto&) { c.outputs.observables = split_list(v); }},
      {"outputs.svg", [](auto& c, auto& v, auto& at) { c.outputs.svg = parse_bool(v, at); }},
  };
  return keys;
}

void set_schedule_field(ModulationSchedule& s, const std::string& field, const std::string& v,
                        const Cursor& at) {
  if (field == "target") {
    try {
      s.target = parse_target(v);
    } catch (const Error& e) {
      config_error(at, e.what());
    }
  } else if (field == "qubit") {
    s.qubit = parse_int(v, at);
  } else if (field == "epsilon") {
    s.epsilon = parse_real(v, at);
  } else if (field == "eta") {
    s.eta = parse_real(v, at);
  } else if (field == "phi") {
    s.phi = parse_real(v, at);
  } else {
    config_error(at, "unknown schedule field '" + field + "'");
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  ScenarioConfig c;
  std::map<int, ModulationSchedule> schedules;
  std::map<int, Cursor> schedule_pos;
  std::set<std::string> seen;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = raw.substr(0, raw.find('#'));
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const int key_col = static_cast<int>(line.find_first_not_of(" \t")) + 1;
    if (eq == std::string::npos) config_error({origin, line_no, key_col}, "expected 'section.key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto vpos = line.find_first_not_of(" \t", eq + 1);
    const Cursor key_at{origin, line_no, key_col};
    const Cursor value_at{origin, line_no, static_cast<int>(vpos == std::string::npos ? eq + 2 : vpos + 1)};

    if (key.find('.') == std::string::npos) config_error(key_at, "key '" + key + "' lacks a section");
    if (!seen.insert(key).second) config_error(key_at, "duplicate key '" + key + "'");

    if (key.rfind("schedule.", 0) == 0) {
      const std::string rest = key.substr(9);
      const auto dot = rest.find('.');
      if (dot == std::string::npos) config_error(key_at, "expected schedule.<index>.<field>");
      const int index = parse_int(rest.substr(0, dot), key_at);
      if (index < 0) config_error(key_at, "schedule index must be non-negative");
      schedule_pos.try_emplace(index, key_at);
      set_schedule_field(schedules[index], rest.substr(dot + 1), value, value_at);
      continue;
    }
    const auto it = scalar_keys().find(key);
    if (it == scalar_keys().end()) config_error(key_at, "unknown key '" + key + "'");
    it->second(c, value, value_at);
  }

  int expected = 0;
  for (const auto& [index, s] : schedules) {
    if (index != expected) config_error(schedule_pos.at(index), "schedule indices must be contiguous from 0");
    c.schedules.push_back(s);
    ++expected;
  }
  if (!seen.contains("system.n_max") && c.initial.kind == InitialKind::Coherent)
    c.n_max = default_fock_cutoff(c.initial.alpha_squared);
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Configuration, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string emit_config(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "system.omega0 = " << format_real(c.system.omega0) << '\n'
     << "system.Omega0 = " << format_real(c.system.Omega0) << '\n'
     << "system.g0 = " << format_real(c.system.g0) << '\n'
     << "system.N = " << c.system.N << '\n'
     << "system.crt = " << (c.system.with_crt ? "true" : "false") << '\n'
     << "system.n_max = " << c.n_max << '\n'
     << "system.basis = " << (c.basis == BasisKind::Collective ? "collective" : "distinguishable") << '\n';
  if (!c.qubit_Omega.empty()) os << "system.qubit_Omega = " << format_reals(c.qubit_Omega) << '\n';
  if (!c.qubit_g.empty()) os << "system.qubit_g = " << format_reals(c.qubit_g) << '\n';
  for (std::size_t i = 0; i < c.schedules.size(); ++i) {
    const auto& s = c.schedules[i];
    const std::string p = "schedule." + std::to_string(i) + ".";
    os << p << "target = " << to_string(s.target) << '\n'
       << p << "qubit = " << s.qubit << '\n'
       << p << "epsilon = " << format_real(s.epsilon) << '\n'
       << p << "eta = " << format_real(s.eta) << '\n'
       << p << "phi = " << format_real(s.phi) << '\n';
  }
  if (c.dissipation) {
    os << "dissipation.kappa = " << format_real(c.dissipation->kappa) << '\n';
    if (!c.dissipation->gamma.empty()) os << "dissipation.gamma = " << format_reals(c.dissipation->gamma) << '\n';
    if (!c.dissipation->gamma_phi.empty())
      os << "dissipation.gamma_phi = " << format_reals(c.dissipation->gamma_phi) << '\n';
  }
  os << "initial.kind = " << (c.initial.kind == InitialKind::DickeFock ? "dicke_fock" : "coherent") << '\n'
     << "initial.k = " << c.initial.k << '\n'
     << "initial.n = " << c.initial.n << '\n'
     << "initial.alpha_squared = " << format_real(c.initial.alpha_squared) << '\n'
     << "transition.n = " << c.transition.n << '\n'
     << "transition.k = " << c.transition.k << '\n'
     << "run.t_span = " << format_real(c.run.t_span) << '\n'
     << "run.unit = " << to_string(c.run.unit) << '\n'
     << "run.samples = " << c.run.samples << '\n'
     << "run.tol = " << format_real(c.run.tol) << '\n';
  if (c.run.eta_factor) os << "run.eta_factor = " << format_real(*c.run.eta_factor) << '\n';
  os << "sweep.factor_lo = " << format_real(c.sweep.factor_lo) << '\n'
     << "sweep.factor_hi = " << format_real(c.sweep.factor_hi) << '\n'
     << "sweep.points = " << c.sweep.points << '\n'
     << "sweep.zoom = " << (c.sweep.zoom ? "true" : "false") << '\n';
  os << "outputs.observables = ";
  for (std::size_t i = 0; i < c.outputs.observables.size(); ++i)
    os << (i ? ", " : "") << c.outputs.observables[i];
  os << '\n' << "outputs.svg = " << (c.outputs.svg ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace dicke
