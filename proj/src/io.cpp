#include "rsnl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace rsnl::io {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& text) {
  ScenarioSpec spec;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("scenario line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "shape") spec.shape = shape_from_string(value);
      else if (key == "levels") spec.levels = std::stoi(value);
      else if (key == "rows") spec.rows = std::stoi(value);
      else if (key == "cols") spec.cols = std::stoi(value);
      else if (key == "depth") spec.depth = std::stoi(value);
      else if (key == "b") spec.b = std::stod(value);
      else if (key == "sigma") spec.sigma = std::stod(value);
      else if (key == "comm_radius") spec.comm_radius = std::stod(value);
      else if (key == "rho") spec.rho = std::stod(value);
      else if (key == "anchor_count") spec.anchor_count = std::stoi(value);
      else if (key == "eta") spec.eta = std::stod(value);
      else if (key == "anchor_noise") spec.anchor_noise = std::stod(value);
      else if (key == "seed") spec.seed = std::stoull(value);
      else if (key == "tilt_range_deg") spec.tilt_range_deg = std::stod(value);
      else if (key == "tilt_prior_noise") spec.tilt_prior_noise = std::stod(value);
      else if (key == "sensor_arm") spec.sensor_arm = std::stod(value);
      else throw std::runtime_error("unknown scenario key: " + key);
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("scenario line " + std::to_string(line_no) + ": bad value for " + key);
    }
  }
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario config: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

void save_realization(const std::string& path, const Realization& p) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write realization: " + path);
  const int d = static_cast<int>(p.rows());
  f << "# robot side x y" << (d == 3 ? " z" : "") << "\n";
  char buf[64];
  for (int c = 0; c < p.cols(); ++c) {
    f << c / 2 << " " << c % 2;
    for (int k = 0; k < d; ++k) {
      std::snprintf(buf, sizeof buf, " %.17g", p(k, c));
      f << buf;
    }
    f << "\n";
  }
}

Realization load_realization(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open realization: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int d = -1;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    int robot, side;
    if (!(ls >> robot >> side)) throw std::runtime_error("bad realization line: " + line);
    std::vector<double> coords;
    double v;
    while (ls >> v) coords.push_back(v);
    if (d < 0) d = static_cast<int>(coords.size());
    if (static_cast<int>(coords.size()) != d || (d != 2 && d != 3))
      throw std::runtime_error("bad realization line: " + line);
    const std::size_t flat = 2 * robot + side;
    if (rows.size() <= flat) rows.resize(flat + 1);
    rows[flat] = std::move(coords);
  }
  if (rows.empty()) throw std::runtime_error("empty realization file: " + path);
  Realization p(d, static_cast<int>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].empty()) throw std::runtime_error("missing sensor row in " + path);
    for (int k = 0; k < d; ++k) p(k, static_cast<int>(c)) = rows[c][k];
  }
  return p;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace rsnl::io
