#include "swarm/io/config.hpp"

#include <fstream>

#include "swarm/errors.hpp"
#include "swarm/rng.hpp"
#include "swarm/scenarios.hpp"

namespace swarm::io {

namespace {

using nlohmann::json;
using model::Model;
using model::PropulsionLaw;

json law_to_json(const PropulsionLaw& law) {
  switch (law.family) {
    case model::PropulsionFamily::VanDerPolRadial:
      return json{{"family", "van_der_pol"}};
    case model::PropulsionFamily::Polynomial:
      return json{{"family", "polynomial"}, {"coefficients", law.zpoly}};
    case model::PropulsionFamily::ShiftedPolynomial:
      return json{{"family", "shifted_polynomial"},
                  {"scale", law.shift_scale},
                  {"power", law.shift_power},
                  {"v0", law.shift_v0}};
  }
  throw InputError("unknown propulsion family");
}

PropulsionLaw law_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "van_der_pol") return PropulsionLaw::van_der_pol();
  if (family == "polynomial")
    return PropulsionLaw::polynomial(j.at("coefficients").get<std::vector<double>>());
  if (family == "shifted_polynomial")
    return PropulsionLaw::shifted_polynomial(j.at("scale").get<double>(),
                                             j.at("power").get<int>(),
                                             j.at("v0").get<double>());
  throw InputError("unknown propulsion family '" + family + "'");
}

model::Propulsion propulsion_from_json(const json& j, std::size_t n) {
  model::Propulsion prop;
  if (j.is_array()) {
    for (const auto& entry : j) prop.laws.push_back(law_from_json(entry));
    if (prop.laws.size() != n)
      throw InputError("per-agent propulsion list must have n entries");
  } else {
    prop = model::Propulsion::homogeneous(law_from_json(j), n);
  }
  return prop;
}

json propulsion_to_json(const model::Propulsion& prop) {
  // Collapse to the homogeneous shorthand when all laws agree.
  bool homogeneous = true;
  for (const auto& law : prop.laws) {
    if (law.family != prop.laws.front().family || law.zpoly != prop.laws.front().zpoly) {
      homogeneous = false;
      break;
    }
  }
  if (homogeneous && !prop.laws.empty()) return law_to_json(prop.laws.front());
  json arr = json::array();
  for (const auto& law : prop.laws) arr.push_back(law_to_json(law));
  return arr;
}

json state_to_json(const model::SwarmState& s) {
  json positions = json::array();
  json velocities = json::array();
  for (std::size_t k = 0; k < s.r.rows(); ++k) {
    positions.push_back(std::vector<double>(s.r.row(k).begin(), s.r.row(k).end()));
    velocities.push_back(std::vector<double>(s.v.row(k).begin(), s.v.row(k).end()));
  }
  return json{{"positions", positions}, {"velocities", velocities}};
}

model::SwarmState explicit_initial(const json& j, std::size_t n, std::size_t d) {
  model::SwarmState s;
  s.t = 0.0;
  s.r = matrix_from_json(j.at("positions"));
  s.v = matrix_from_json(j.at("velocities"));
  if (s.r.rows() != n || s.r.cols() != d || s.v.rows() != n || s.v.cols() != d)
    throw InputError("initial positions/velocities must both be n x d");
  if (!s.r.all_finite() || !s.v.all_finite())
    throw InputError("initial state has non-finite entries");
  return s;
}

RunConfig from_model_block(const json& doc) {
  const json& mj = doc.at("model");
  const auto n = mj.at("n").get<std::size_t>();
  const auto d = mj.at("d").get<std::size_t>();
  if (n == 0 || d == 0) throw InputError("model needs n >= 1 and d >= 1");

  RunConfig rc;
  rc.seed = doc.value("seed", std::uint64_t{0});
  auto prop = propulsion_from_json(mj.at("propulsion"), n);

  const json& cj = mj.at("coupling");
  const std::string type = cj.at("type").get<std::string>();
  json coupling_echo;
  if (type == "linear") {
    const double zero_tol = cj.value("zero_tol", 1e-9);
    rc.model = model::make_linear_model(n, d, std::move(prop),
                                        matrix_from_json(cj.at("matrix")), zero_tol);
    coupling_echo = {{"type", "linear"},
                     {"matrix", matrix_to_json(rc.model.linear().A)},
                     {"zero_tol", zero_tol}};
  } else if (type == "morse") {
    model::MorseCoupling morse;
    morse.C_a = cj.at("C_a").get<double>();
    morse.l_a = cj.at("l_a").get<double>();
    morse.C_r = cj.at("C_r").get<double>();
    morse.l_r = cj.at("l_r").get<double>();
    rc.model = model::make_morse_model(n, d, std::move(prop), morse);
    coupling_echo = {{"type", "morse"}, {"C_a", morse.C_a}, {"l_a", morse.l_a},
                     {"C_r", morse.C_r}, {"l_r", morse.l_r}};
  } else if (type == "dispersal_pair") {
    // Named bounded coupling so the construction round-trips through the echo.
    if (n != 2 || d != 1)
      throw InputError("dispersal_pair coupling requires n = 2, d = 1");
    const double box = cj.at("box_size").get<double>();
    auto built = scenarios::build("dispersal_pair", {{"M", box}});
    rc.model = std::move(built.model);
    rc.model.propulsion = std::move(prop);
    coupling_echo = {{"type", "dispersal_pair"}, {"box_size", box}};
  } else {
    throw InputError("unknown coupling type '" + type + "'");
  }

  const json& ij = mj.at("initial");
  if (ij.contains("positions")) {
    rc.initial = explicit_initial(ij, n, d);
  } else {
    const std::string recipe = ij.at("recipe").get<std::string>();
    if (recipe != "uniform") throw InputError("unknown initial recipe '" + recipe + "'");
    const double ps = ij.value("position_scale", 2.0);
    const double vs = ij.value("velocity_scale", 1.0);
    Rng rng = Rng::stream(rc.seed, 0);
    rc.initial.t = 0.0;
    rc.initial.r = linalg::Matrix(n, d);
    rc.initial.v = linalg::Matrix(n, d);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t c = 0; c < d; ++c) rc.initial.r(k, c) = rng.uniform(-ps, ps);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t c = 0; c < d; ++c)
        rc.initial.v(k, c) = vs == 0.0 ? 0.0 : rng.uniform(-vs, vs);
  }

  rc.integrator = integrator_from_json(doc.value("integrator", json::object()),
                                       integrate::Config{});
  rc.window_fraction = doc.value("outputs", json::object()).value("window_fraction", 0.5);

  rc.resolved = {{"seed", rc.seed},
                 {"model",
                  {{"n", n},
                   {"d", d},
                   {"coupling", coupling_echo},
                   {"propulsion", propulsion_to_json(rc.model.propulsion)},
                   {"initial", state_to_json(rc.initial)}}},
                 {"integrator", integrator_to_json(rc.integrator)},
                 {"outputs", {{"window_fraction", rc.window_fraction}}}};
  return rc;
}

RunConfig from_scenario_block(const json& doc) {
  const json& sj = doc.at("scenario");
  const std::string name = sj.at("name").get<std::string>();
  std::map<std::string, double> overrides;
  const json set_block = sj.value("set", json::object());
  for (const auto& [key, value] : set_block.items()) overrides[key] = value.get<double>();
  if (doc.contains("seed")) overrides["seed"] = static_cast<double>(doc.at("seed").get<std::uint64_t>());

  auto scenario = scenarios::build(name, overrides);

  RunConfig rc;
  rc.seed = scenario.seed;
  rc.model = std::move(scenario.model);
  rc.initial = std::move(scenario.initial);
  rc.integrator = integrator_from_json(doc.value("integrator", json::object()),
                                       scenario.integrator);
  rc.window_fraction = doc.value("outputs", json::object()).value("window_fraction", 0.5);

  json coupling_echo;
  if (rc.model.is_linear()) {
    coupling_echo = {{"type", "linear"}, {"matrix", matrix_to_json(rc.model.linear().A)},
                     {"zero_tol", 1e-9}};
  } else if (const auto* morse = std::get_if<model::MorseCoupling>(&rc.model.coupling)) {
    coupling_echo = {{"type", "morse"}, {"C_a", morse->C_a}, {"l_a", morse->l_a},
                     {"C_r", morse->C_r}, {"l_r", morse->l_r}};
  } else {
    coupling_echo = {{"type", "dispersal_pair"}, {"box_size", scenario.params.at("M")}};
  }

  rc.resolved = {{"seed", rc.seed},
                 {"model",
                  {{"n", rc.model.n},
                   {"d", rc.model.d},
                   {"coupling", coupling_echo},
                   {"propulsion", propulsion_to_json(rc.model.propulsion)},
                   {"initial", state_to_json(rc.initial)}}},
                 {"integrator", integrator_to_json(rc.integrator)},
                 {"outputs", {{"window_fraction", rc.window_fraction}}},
                 {"provenance", {{"scenario", name}, {"set", sj.value("set", json::object())}}}};
  return rc;
}

}  // namespace

nlohmann::json matrix_to_json(const linalg::Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i)
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

linalg::Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw InputError("matrix must be a non-empty array of arrays");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  linalg::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw InputError("matrix rows have inconsistent lengths");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

nlohmann::json integrator_to_json(const integrate::Config& cfg) {
  return {{"method", cfg.method == integrate::Method::Rk4 ? "rk4" : "embedded45"},
          {"h", cfg.h},
          {"abs_tol", cfg.abs_tol},
          {"rel_tol", cfg.rel_tol},
          {"h_min", cfg.h_min},
          {"h_max", cfg.h_max},
          {"t_end", cfg.t_end},
          {"sample_every", cfg.sample_every}};
}

integrate::Config integrator_from_json(const nlohmann::json& j, integrate::Config base) {
  if (j.contains("method")) {
    const std::string method = j.at("method").get<std::string>();
    if (method == "rk4")
      base.method = integrate::Method::Rk4;
    else if (method == "embedded45")
      base.method = integrate::Method::Embedded45;
    else
      throw InputError("unknown integrator method '" + method + "'");
  }
  base.h = j.value("h", base.h);
  base.abs_tol = j.value("abs_tol", base.abs_tol);
  base.rel_tol = j.value("rel_tol", base.rel_tol);
  base.h_min = j.value("h_min", base.h_min);
  base.h_max = j.value("h_max", base.h_max);
  base.t_end = j.value("t_end", base.t_end);
  base.sample_every = j.value("sample_every", base.sample_every);
  base.validate();
  return base;
}

RunConfig config_from_json(const nlohmann::json& doc) {
  const bool has_model = doc.contains("model");
  const bool has_scenario = doc.contains("scenario");
  if (has_model == has_scenario)
    throw InputError("config needs exactly one of 'model' or 'scenario'");
  try {
    return has_model ? from_model_block(doc) : from_scenario_block(doc);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports byte offsets; recover line/column for the diagnostic.
    std::ifstream again(path);
    std::string text((std::istreambuf_iterator<char>(again)),
                     std::istreambuf_iterator<char>());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw InputError("malformed JSON at line " + std::to_string(line) + ", column " +
                     std::to_string(column) + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace swarm::io
