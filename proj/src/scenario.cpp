/*
 Copyright 2026 The covsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "covsteer/scenario.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "covsteer/artifacts.hpp"
#include "covsteer/error.hpp"

namespace covsteer {

namespace {

constexpr double kSecondsPerDay = 86400.0;

struct Field {
  std::vector<double> values;
  std::string text;  // raw value for string fields
  std::string unit;
  int line = 0;
};

[[noreturn]] void fail(const std::string& source, int line, const std::string& key,
                       const std::string& what) {
  throw Error(ErrorCategory::kParse,
              fmt::format("{}:{}: field '{}': {}", source, line, key, what));
}

bool parse_number(const std::string& token, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(token, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == token.size();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Fields {
 public:
  Fields(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.resize(hash);
      raw = trim(raw);
      if (raw.empty()) continue;
      const auto eq = raw.find('=');
      if (eq == std::string::npos) fail(source_, line, raw, "expected 'key = value'");
      const std::string key = trim(raw.substr(0, eq));
      const std::string rhs = trim(raw.substr(eq + 1));
      if (key.empty()) fail(source_, line, key, "empty key");
      if (fields_.count(key)) fail(source_, line, key, "duplicate field");
      Field f;
      f.line = line;
      f.text = rhs;
      std::istringstream tokens(rhs);
      std::string tok;
      std::vector<std::string> all;
      while (tokens >> tok) all.push_back(tok);
      for (std::size_t i = 0; i < all.size(); ++i) {
        double v = 0.0;
        if (parse_number(all[i], v)) {
          f.values.push_back(v);
        } else if (i + 1 == all.size() && !f.values.empty()) {
          f.unit = all[i];
        } else {
          f.values.clear();
          f.unit.clear();
          break;
        }
      }
      fields_[key] = f;
    }
  }

  bool has(const std::string& key) const { return fields_.count(key) > 0; }

  const Field& get(const std::string& key) const {
    const auto it = fields_.find(key);
    if (it == fields_.end()) fail(source_, 0, key, "missing field");
    used_.insert(key);
    return it->second;
  }

  std::string text(const std::string& key) const { return get(key).text; }

  // Numeric values converted by the factor of the given unit tag.
  std::vector<double> numbers(const std::string& key,
                              const std::map<std::string, double>& units,
                              std::size_t min_count, std::size_t max_count) const {
    const Field& f = get(key);
    if (f.values.empty()) fail(source_, f.line, key, "expected numeric values");
    if (f.values.size() < min_count || f.values.size() > max_count) {
      fail(source_, f.line, key,
           fmt::format("expected {} value(s), got {}",
                       min_count == max_count ? std::to_string(min_count)
                                              : fmt::format("{}..{}", min_count, max_count),
                       f.values.size()));
    }
    double factor = 1.0;
    if (units.empty()) {
      if (!f.unit.empty()) fail(source_, f.line, key, "unexpected unit tag '" + f.unit + "'");
    } else {
      if (f.unit.empty()) fail(source_, f.line, key, "missing unit tag");
      const auto it = units.find(f.unit);
      if (it == units.end()) {
        std::string allowed;
        for (const auto& [name, _] : units) allowed += (allowed.empty() ? "" : ", ") + name;
        fail(source_, f.line, key,
             "unit tag '" + f.unit + "' not accepted (expected " + allowed + ")");
      }
      factor = it->second;
    }
    std::vector<double> out;
    for (double v : f.values) out.push_back(v * factor);
    return out;
  }

  double number(const std::string& key, const std::map<std::string, double>& units) const {
    return numbers(key, units, 1, 1)[0];
  }

  int integer(const std::string& key) const {
    const double v = number(key, {});
    if (v != std::floor(v) || std::abs(v) > 1e9) {
      fail(source_, get(key).line, key, "expected an integer");
    }
    return static_cast<int>(v);
  }

  int line(const std::string& key) const { return has(key) ? get(key).line : 0; }

  void check_all_used() const {
    for (const auto& [key, f] : fields_) {
      if (!used_.count(key)) fail(source_, f.line, key, "unknown field");
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, Field> fields_;
  mutable std::set<std::string> used_;
};

const std::map<std::string, double> kLength{{"km", 1.0}, {"m", 1e-3}};
const std::map<std::string, double> kSpeed{{"km/s", 1.0}, {"m/s", 1e-3}};
const std::map<std::string, double> kMass{{"kg", 1.0}};
const std::map<std::string, double> kLength2{{"km2", 1.0}};
const std::map<std::string, double> kSpeed2{{"km2/s2", 1.0}};
const std::map<std::string, double> kMass2{{"kg2", 1.0}};
const std::map<std::string, double> kTime{{"s", 1.0}, {"day", kSecondsPerDay}};
const std::map<std::string, double> kMu{{"km3/s2", 1.0}};
const std::map<std::string, double> kAccel{{"km/s2", 1.0}, {"m/s2", 1e-3}};
const std::map<std::string, double> kForce{{"kg.km/s2", 1.0}, {"N", 1e-3}};
const std::map<std::string, double> kGamma{{"kg.km/s1.5", 1.0}};
const std::map<std::string, double> kNone{};

// Per-axis variances from either a sigma field (squared) or a variance field.
std::vector<double> variances(const Fields& f, const std::string& prefix,
                              const std::string& quantity, int count,
                              const std::map<std::string, double>& sigma_units,
                              const std::map<std::string, double>& var_units) {
  const std::string sk = prefix + ".sigma." + quantity;
  const std::string vk = prefix + ".variance." + quantity;
  if (f.has(sk) && f.has(vk)) {
    fail(f.source(), f.line(vk), vk, "both sigma and variance given for " + quantity);
  }
  std::vector<double> out;
  if (f.has(sk)) {
    out = f.numbers(sk, sigma_units, 1, count);
    for (double& v : out) {
      if (v < 0.0) fail(f.source(), f.line(sk), sk, "negative standard deviation");
      v *= v;
    }
  } else {
    out = f.numbers(vk, var_units, 1, count);
    for (double v : out) {
      if (v < 0.0) fail(f.source(), f.line(vk), vk, "negative variance");
    }
  }
  if (out.size() == 1) out.assign(count, out[0]);
  if (static_cast<int>(out.size()) != count) {
    const std::string key = f.has(sk) ? sk : vk;
    fail(f.source(), f.line(key), key, fmt::format("expected 1 or {} values", count));
  }
  return out;
}

Eigen::MatrixXd covariance(const Fields& f, const std::string& prefix, int d) {
  const int n = 2 * d + 1;
  const std::string full = prefix + ".covariance";
  if (f.has(full)) {
    const auto v = f.numbers(full, kNone, n * n, n * n);
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) P(i, j) = v[i * n + j];
    return P;
  }
  Eigen::VectorXd diag(n);
  const auto r = variances(f, prefix, "position", d, kLength, kLength2);
  const auto v = variances(f, prefix, "velocity", d, kSpeed, kSpeed2);
  const auto m = variances(f, prefix, "mass", 1, kMass, kMass2);
  for (int i = 0; i < d; ++i) {
    diag(i) = r[i];
    diag(d + i) = v[i];
  }
  diag(2 * d) = m[0];
  return diag.asDiagonal();
}

Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool on_off(const Fields& f, const std::string& key) {
  const std::string t = f.text(key);
  if (t == "on" || t == "true") return true;
  if (t == "off" || t == "false") return false;
  fail(f.source(), f.line(key), key, "expected on or off");
}

void check_covariance(const Eigen::MatrixXd& P, int n, const std::string& field) {
  if (P.rows() != n || P.cols() != n) {
    throw Error(ErrorCategory::kInvalidArgument,
                fmt::format("scenario field '{}': expected {}x{} matrix", field, n, n));
  }
  if (!P.allFinite() || (P - P.transpose()).cwiseAbs().maxCoeff() >
                            1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCategory::kInvalidArgument,
                fmt::format("scenario field '{}': covariance not symmetric", field));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    throw Error(ErrorCategory::kInvalidArgument,
                fmt::format("scenario field '{}': covariance not positive semidefinite",
                            field));
  }
}

std::string fmt_values(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += fmt::format("{}{:.17g}", i ? " " : "", v(i));
  }
  return out;
}

}  // namespace

std::vector<double> Scenario::grid() const {
  std::vector<double> t(segments + 1);
  for (int k = 0; k <= segments; ++k) t[k] = time_of_flight * k / segments;
  return t;
}

void Scenario::validate() const {
  auto bad = [](const std::string& field, const std::string& what) {
    throw Error(ErrorCategory::kInvalidArgument,
                "scenario field '" + field + "': " + what);
  };
  if (spatial != 2 && spatial != 3) bad("dimension", "must be 2 or 3");
  const int n = state_dim();
  if (initial_mean.size() != n) bad("initial", "state has wrong dimension");
  if (final_mean.size() != 2 * spatial) bad("final", "position/velocity has wrong dimension");
  if (!initial_mean.allFinite() || !final_mean.allFinite()) bad("initial/final", "not finite");
  if (!(initial_mean(n - 1) > 0.0)) bad("initial.mass", "must be positive");
  check_covariance(initial_cov, n, "initial covariance");
  check_covariance(final_cov, n, "final covariance");
  try {
    params.validate();
  } catch (const Error& e) {
    bad("physical parameters", e.what());
  }
  if (!(time_of_flight > 0.0)) bad("time_of_flight", "must be positive");
  if (segments < 2) bad("segments", "must be at least 2");
  try {
    solver.validate();
  } catch (const Error& e) {
    bad("solver", e.what());
  }
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  const Fields f(text, source);
  Scenario s;
  s.name = f.has("name") ? f.text("name") : "";
  s.spatial = f.integer("dimension");
  if (s.spatial != 2 && s.spatial != 3) {
    fail(source, f.line("dimension"), "dimension", "must be 2 or 3");
  }
  const int d = s.spatial;
  s.segments = f.integer("segments");
  s.time_of_flight = f.number("time_of_flight", kTime);

  s.initial_mean.resize(2 * d + 1);
  s.initial_mean << vec(f.numbers("initial.position", kLength, d, d)),
      vec(f.numbers("initial.velocity", kSpeed, d, d)), f.number("initial.mass", kMass);
  s.final_mean.resize(2 * d);
  s.final_mean << vec(f.numbers("final.position", kLength, d, d)),
      vec(f.numbers("final.velocity", kSpeed, d, d));
  s.initial_cov = covariance(f, "initial", d);
  s.final_cov = covariance(f, "final", d);

  s.params.mu = f.number("mu", kMu);
  s.params.isp = f.number("isp", kTime);
  s.params.g0 = f.number("g0", kAccel);
  s.params.u_max = f.number("u_max", kForce);
  s.params.gamma = f.number("gamma", kGamma);

  SolverConfig& c = s.solver;
  if (f.has("solver.beta_u")) c.beta_u = f.number("solver.beta_u", kNone);
  if (f.has("solver.p")) c.p = f.number("solver.p", kNone);
  if (f.has("solver.eps_Y")) c.eps_Y = f.number("solver.eps_Y", kNone);
  if (f.has("solver.eps_x")) c.eps_x = f.number("solver.eps_x", kNone);
  if (f.has("solver.eps_zeta")) c.eps_zeta = f.number("solver.eps_zeta", kNone);
  if (f.has("solver.d")) c.d = f.number("solver.d", kNone);
  if (f.has("solver.max_iterations")) c.max_iterations = f.integer("solver.max_iterations");
  if (f.has("solver.terminal_covariance")) {
    try {
      c.terminal_mode = parse_terminal_mode(f.text("solver.terminal_covariance"));
    } catch (const Error& e) {
      fail(source, f.line("solver.terminal_covariance"), "solver.terminal_covariance",
           e.what());
    }
  }
  if (f.has("solver.mass_stochastic")) c.mass_stochastic = on_off(f, "solver.mass_stochastic");
  f.check_all_used();
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  return parse_scenario(read_text_file(path), path);
}

std::string write_scenario(const Scenario& s) {
  s.validate();
  const int d = s.spatial;
  const int n = s.state_dim();
  std::string out = "# covsteer scenario\n";
  if (!s.name.empty()) out += fmt::format("name = {}\n", s.name);
  out += fmt::format("dimension = {}\n", d);
  out += fmt::format("segments = {}\n", s.segments);
  out += fmt::format("time_of_flight = {:.17g} s\n", s.time_of_flight);
  out += fmt::format("initial.position = {} km\n", fmt_values(s.initial_mean.head(d)));
  out += fmt::format("initial.velocity = {} km/s\n", fmt_values(s.initial_mean.segment(d, d)));
  out += fmt::format("initial.mass = {:.17g} kg\n", s.initial_mean(2 * d));
  out += fmt::format("final.position = {} km\n", fmt_values(s.final_mean.head(d)));
  out += fmt::format("final.velocity = {} km/s\n", fmt_values(s.final_mean.tail(d)));
  for (const auto& [prefix, P] : {std::pair<std::string, const Eigen::MatrixXd*>{"initial", &s.initial_cov},
                                  {"final", &s.final_cov}}) {
    const Eigen::MatrixXd off = P->diagonal().asDiagonal();
    if ((*P - off).cwiseAbs().maxCoeff() == 0.0) {
      const Eigen::VectorXd diag = P->diagonal();
      out += fmt::format("{}.variance.position = {} km2\n", prefix, fmt_values(diag.head(d)));
      out += fmt::format("{}.variance.velocity = {} km2/s2\n", prefix,
                         fmt_values(diag.segment(d, d)));
      out += fmt::format("{}.variance.mass = {:.17g} kg2\n", prefix, diag(2 * d));
    } else {
      Eigen::VectorXd flat(n * n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) flat(i * n + j) = (*P)(i, j);
      out += fmt::format("{}.covariance = {}\n", prefix, fmt_values(flat));
    }
  }
  out += fmt::format("mu = {:.17g} km3/s2\n", s.params.mu);
  out += fmt::format("isp = {:.17g} s\n", s.params.isp);
  out += fmt::format("g0 = {:.17g} km/s2\n", s.params.g0);
  out += fmt::format("u_max = {:.17g} kg.km/s2\n", s.params.u_max);
  out += fmt::format("gamma = {:.17g} kg.km/s1.5\n", s.params.gamma);
  const SolverConfig& c = s.solver;
  out += fmt::format("solver.beta_u = {:.17g}\n", c.beta_u);
  out += fmt::format("solver.p = {:.17g}\n", c.p);
  out += fmt::format("solver.eps_Y = {:.17g}\n", c.eps_Y);
  out += fmt::format("solver.eps_x = {:.17g}\n", c.eps_x);
  out += fmt::format("solver.eps_zeta = {:.17g}\n", c.eps_zeta);
  out += fmt::format("solver.d = {:.17g}\n", c.d);
  out += fmt::format("solver.max_iterations = {}\n", c.max_iterations);
  out += fmt::format("solver.terminal_covariance = {}\n", to_string(c.terminal_mode));
  out += fmt::format("solver.mass_stochastic = {}\n", c.mass_stochastic ? "on" : "off");
  return out;
}

namespace {

const char* const kEarthMars2d = R"(# Planar Earth-to-Mars rendezvous
name = earth-mars-2d
dimension = 2
segments = 40
time_of_flight = 348.795 day
initial.position = -140699693 -51614428 km
initial.velocity = 9.774596 -28.07828 km/s
initial.mass = 5000 kg
initial.sigma.position = 10 km
initial.sigma.velocity = 0.1 km/s
initial.sigma.mass = 0 kg
final.position = -172682023 176959469 km
final.velocity = -16.427384 -14.860506 km/s
final.sigma.position = 3.16e5 km
final.sigma.velocity = 0.1 km/s
final.sigma.mass = 70.7107 kg
mu = 1.3271e11 km3/s2
isp = 3000 s
g0 = 9.80665 m/s2
u_max = 5 N
gamma = 9e-5 kg.km/s1.5
solver.d = 100
solver.eps_Y = 0.01
solver.p = 0.95
solver.beta_u = 0.95
solver.eps_x = 5e-4
solver.eps_zeta = 1e-6
)";

const char* const kEarthMars3d = R"(# Earth-to-Mars rendezvous in three dimensions
name = earth-mars-3d
dimension = 3
segments = 60
time_of_flight = 348.795 day
initial.position = -140699693 -51614428 980 km
initial.velocity = 9.774596 -28.07828 4.337725e-4 km/s
initial.mass = 5000 kg
initial.variance.position = 100 km2
initial.variance.velocity = 1e-2 km2/s2
initial.variance.mass = 0 kg2
final.position = -172682023 176959469 7948912 km
final.velocity = -16.427384 -14.860506 9.21486e-2 km/s
final.variance.position = 1e11 km2
final.variance.velocity = 1e-2 km2/s2
final.variance.mass = {} kg2
mu = 1.3271e11 km3/s2
isp = 3000 s
g0 = 9.80665e-3 km/s2
u_max = 5 N
gamma = 9e-5 kg.km/s1.5
solver.d = 100
solver.eps_Y = 0.01
solver.p = 0.95
solver.beta_u = 0.95
solver.eps_x = 5e-4
solver.eps_zeta = 1e-6
)";

}  // namespace

std::vector<std::string> preset_names() {
  return {"earth-mars-2d", "earth-mars-3d", "earth-mars-3d-sigma40"};
}

std::string preset_text(const std::string& name) {
  if (name == "earth-mars-2d") return kEarthMars2d;
  if (name == "earth-mars-3d") {
    return fmt::format(fmt::runtime(kEarthMars3d), 5000);
  }
  if (name == "earth-mars-3d-sigma40") {
    std::string text = fmt::format(fmt::runtime(kEarthMars3d), 1600);
    const std::string from = "name = earth-mars-3d\n";
    text.replace(text.find(from), from.size(), "name = earth-mars-3d-sigma40\n");
    return text;
  }
  throw Error(ErrorCategory::kInvalidArgument, "unknown preset '" + name + "'");
}

Scenario preset(const std::string& name) {
  return parse_scenario(preset_text(name), "preset:" + name);
}

}  // namespace covsteer
