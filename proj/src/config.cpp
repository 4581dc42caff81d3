#include "gmfc/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "gmfc/textio.hpp"

namespace gmfc {

// ----------------------------------------------------------------- parsing

const std::string* IniFile::find(const std::string& section, const std::string& key) const {
  for (const IniEntry& e : entries)
    if (e.section == section && e.key == key) return &e.value;
  return nullptr;
}

IniFile parse_ini_text(const std::string& text) {
  IniFile file;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3)
        throw BadSpec("config line " + fmt_int(lineno) + ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty())
        throw BadSpec("config line " + fmt_int(lineno) + ": empty section name");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw BadSpec("config line " + fmt_int(lineno) + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw BadSpec("config line " + fmt_int(lineno) + ": empty key");
    if (value.empty())
      throw BadSpec("config line " + fmt_int(lineno) + ": empty value for key " + key);
    if (section.empty())
      throw BadSpec("config line " + fmt_int(lineno) + ": key " + key +
                    " appears before any section");
    if (file.find(section, key))
      throw BadSpec("config line " + fmt_int(lineno) + ": duplicate key [" + section + "] " +
                    key);
    file.entries.push_back({section, key, value});
  }
  return file;
}

IniFile load_ini(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw BadSpec("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ini_text(ss.str());
}

// ------------------------------------------------------------------ reader

namespace {

std::string field_name(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

double parse_double_value(const std::string& value, const std::string& where) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (!end || end == value.c_str() || *end != '\0')
    throw BadSpec("config field " + where + ": not a number: " + value);
  return v;
}

long long parse_int_value(const std::string& value, const std::string& where) {
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (!end || end == value.c_str() || *end != '\0')
    throw BadSpec("config field " + where + ": not an integer: " + value);
  return v;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts = split(value, ',');
  for (std::string& p : parts) p = trim(p);
  return parts;
}

}  // namespace

ConfigReader::ConfigReader(IniFile file) : file_(std::move(file)) {
  used_.assign(file_.entries.size(), 0);
}

const std::string* ConfigReader::lookup(const std::string& section, const std::string& key) {
  for (size_t i = 0; i < file_.entries.size(); ++i) {
    const IniEntry& e = file_.entries[i];
    if (e.section == section && e.key == key) {
      used_[i] = 1;
      return &e.value;
    }
  }
  return nullptr;
}

bool ConfigReader::has(const std::string& section, const std::string& key) const {
  return file_.find(section, key) != nullptr;
}

std::string ConfigReader::get_string(const std::string& section, const std::string& key) {
  const std::string* v = lookup(section, key);
  if (!v) throw BadSpec("missing config field " + field_name(section, key));
  return *v;
}

std::string ConfigReader::get_string(const std::string& section, const std::string& key,
                                     const std::string& fallback) {
  const std::string* v = lookup(section, key);
  return v ? *v : fallback;
}

double ConfigReader::get_double(const std::string& section, const std::string& key) {
  return parse_double_value(get_string(section, key), field_name(section, key));
}

double ConfigReader::get_double(const std::string& section, const std::string& key,
                                double fallback) {
  const std::string* v = lookup(section, key);
  return v ? parse_double_value(*v, field_name(section, key)) : fallback;
}

int ConfigReader::get_int(const std::string& section, const std::string& key) {
  long long v = parse_int_value(get_string(section, key), field_name(section, key));
  return (int)v;
}

int ConfigReader::get_int(const std::string& section, const std::string& key, int fallback) {
  const std::string* v = lookup(section, key);
  return v ? (int)parse_int_value(*v, field_name(section, key)) : fallback;
}

std::uint64_t ConfigReader::get_u64(const std::string& section, const std::string& key,
                                    std::uint64_t fallback) {
  const std::string* v = lookup(section, key);
  if (!v) return fallback;
  char* end = nullptr;
  unsigned long long x = std::strtoull(v->c_str(), &end, 10);
  if (!end || *end != '\0')
    throw BadSpec("config field " + field_name(section, key) + ": not an integer: " + *v);
  return x;
}

bool ConfigReader::get_bool(const std::string& section, const std::string& key,
                            bool fallback) {
  const std::string* v = lookup(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw BadSpec("config field " + field_name(section, key) + ": expected true or false");
}

std::vector<double> ConfigReader::get_doubles(const std::string& section,
                                              const std::string& key) {
  std::string raw = get_string(section, key);
  std::vector<double> out;
  for (const std::string& p : split_list(raw))
    out.push_back(parse_double_value(p, field_name(section, key)));
  if (out.empty()) throw BadSpec("config field " + field_name(section, key) + ": empty list");
  return out;
}

std::vector<double> ConfigReader::get_doubles(const std::string& section,
                                              const std::string& key,
                                              std::vector<double> fallback) {
  return has(section, key) ? get_doubles(section, key) : std::move(fallback);
}

std::vector<int> ConfigReader::get_ints(const std::string& section, const std::string& key) {
  std::string raw = get_string(section, key);
  std::vector<int> out;
  for (const std::string& p : split_list(raw))
    out.push_back((int)parse_int_value(p, field_name(section, key)));
  if (out.empty()) throw BadSpec("config field " + field_name(section, key) + ": empty list");
  return out;
}

void ConfigReader::finish() const {
  for (size_t i = 0; i < file_.entries.size(); ++i)
    if (!used_[i])
      throw BadSpec("unknown config key " +
                    field_name(file_.entries[i].section, file_.entries[i].key));
}

// ----------------------------------------------------------------- workers

int resolve_workers(int cli_value, int config_value) {
  if (cli_value > 0) return cli_value;
  if (config_value > 0) return config_value;
  if (const char* env = std::getenv("GMFC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return (int)v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? (int)hw : 1;
}

// ------------------------------------------------------------- sub-schemas

namespace {

SimConfig parse_sim(ConfigReader& r, bool need_n) {
  SimConfig sim;
  if (need_n) sim.n = r.get_int("sim", "n");
  sim.T = r.get_double("sim", "T");
  sim.dt = r.get_double("sim", "dt");
  sim.reps = r.get_int("sim", "reps", 1);
  sim.store_stride = r.get_int("sim", "store_stride", 0);
  sim.seed = r.get_u64("sim", "seed", 1);
  sim.workers = r.get_int("sim", "workers", 0);
  return sim;
}

InitSpec parse_init(ConfigReader& r) {
  std::string family = r.get_string("init", "family", "gaussian");
  if (family == "gaussian") {
    std::vector<double> p = r.get_doubles("init", "params", {0.0, 1.0});
    if (p.size() != 2) throw BadSpec("config field [init] params: gaussian wants mean,stddev");
    return InitSpec::gaussian(p[0], p[1]);
  }
  if (family == "dirac") return InitSpec::dirac(r.get_doubles("init", "params", {0.0}));
  if (family == "uniform") {
    std::vector<double> p = r.get_doubles("init", "params", {0.0, 1.0});
    if (p.size() != 2) throw BadSpec("config field [init] params: uniform wants lo,hi");
    return InitSpec::uniform(p[0], p[1]);
  }
  throw BadSpec("config field [init] family: unknown family " + family +
                " (per-label tables are library-only)");
}

ActionBox parse_box(ConfigReader& r, const std::string& section, const std::string& key) {
  std::vector<double> b = r.get_doubles(section, key, {0.0, 1.0});
  if (b.size() != 2 || !(b[0] < b[1]))
    throw BadSpec("config field " + std::string("[") + section + "] " + key +
                  ": expected lo,hi with lo < hi");
  return ActionBox::interval(b[0], b[1]);
}

std::vector<double> table_cells(const std::string& path, const std::string& where) {
  StepKernel grid = read_step_kernel_csv(path);
  if (grid.dim() != 1)
    throw BadSpec("config field " + where + ": table grid must hold scalar cells");
  std::vector<double> cells;
  for (int i = 0; i < grid.n(); ++i)
    for (int j = 0; j < grid.n(); ++j) cells.push_back(grid.scalar(i, j));
  return cells;
}

InteractionControl parse_gamma(ConfigReader& r) {
  ActionBox box = parse_box(r, "controls", "gamma.box");
  std::string family = r.get_string("controls", "gamma.family", "constant");
  if (family == "constant") {
    std::vector<double> p = r.get_doubles("controls", "gamma.params", {1.0});
    if ((int)p.size() != box.dim)
      throw BadSpec("config field [controls] gamma.params: wants one value per action "
                    "coordinate");
    return InteractionControl::constant(std::move(p), box);
  }
  if (family == "bang_bang")
    return InteractionControl::bang_bang_phi(
        phi_registry(r.get_string("controls", "gamma.phi")), box);
  if (family == "product_form") {
    std::vector<double> p = r.get_doubles("controls", "gamma.params");
    if (p.size() != 6)
      throw BadSpec("config field [controls] gamma.params: product_form wants "
                    "offset,scale,au,ax,bu,bx");
    return InteractionControl::product_form(p[0], p[1], p[2], p[3], p[4], p[5], box);
  }
  if (family == "table") {
    std::string path = r.get_string("controls", "gamma.path");
    std::vector<double> cells = table_cells(path, "[controls] gamma.path");
    int grid_n = (int)std::llround(std::sqrt((double)cells.size()));
    return InteractionControl::table(grid_n, std::move(cells), box);
  }
  throw BadSpec("config field [controls] gamma.family: unknown family " + family);
}

RegularControl parse_alpha(ConfigReader& r) {
  ActionBox box = parse_box(r, "controls", "alpha.box");
  std::string family = r.get_string("controls", "alpha.family", "constant");
  if (family == "constant") {
    std::vector<double> p = r.get_doubles("controls", "alpha.params", {0.0});
    if ((int)p.size() != box.dim)
      throw BadSpec("config field [controls] alpha.params: wants one value per action "
                    "coordinate");
    return RegularControl::constant(std::move(p), box);
  }
  if (family == "threshold") {
    std::vector<double> p = r.get_doubles("controls", "alpha.params");
    if (p.size() != 3)
      throw BadSpec("config field [controls] alpha.params: threshold wants cut,below,above");
    return RegularControl::threshold(p[0], {p[1]}, {p[2]}, box);
  }
  if (family == "affine") {
    std::vector<double> p = r.get_doubles("controls", "alpha.params");
    if (p.size() != 3)
      throw BadSpec("config field [controls] alpha.params: affine wants "
                    "bias,state_coef,label_coef");
    return RegularControl::affine_clamped(1, {p[0]}, {p[1]}, {p[2]}, box);
  }
  throw BadSpec("config field [controls] alpha.family: unknown family " + family);
}

ControlLaw parse_controls(ConfigReader& r) {
  bool relaxed = r.get_bool("controls", "relaxed", false);
  RegularControl alpha = parse_alpha(r);
  if (relaxed) return ControlLaw::relaxed_law(uniform_relaxed_control(), alpha);
  return ControlLaw::lifted(parse_gamma(r), alpha);
}

ModelSpec parse_model(ConfigReader& r) {
  std::string id = r.get_string("model", "id", "attraction");
  if (id == "attraction")
    return attraction_pair_model(r.get_string("model", "phi", "tanh_diff"));
  if (id == "social")
    return social_model(r.get_string("model", "cost", "quadratic"),
                        r.get_double("model", "b1_scale", 0.2));
  throw BadSpec("config field [model] id: unknown model " + id);
}

StepKernel parse_kernel(ConfigReader& r, int n) {
  std::string source = r.get_string("kernel", "source", "graphon");
  if (source == "graphon")
    return sample_from_graphon(
        graphon_registry(r.get_string("kernel", "graphon_id", "constant")), n);
  if (source == "matrix") {
    StepKernel k = read_step_kernel_csv(r.get_string("kernel", "path"));
    if (k.n() != n)
      throw BadSpec("config field [kernel] path: kernel size " + fmt_int(k.n()) +
                    " does not match [sim] n = " + fmt_int(n));
    return k;
  }
  throw BadSpec("config field [kernel] source: expected graphon or matrix");
}

}  // namespace

// ---------------------------------------------------------------- commands

SimulateSetup parse_simulate_config(const IniFile& file) {
  ConfigReader r(file);
  SimulateSetup s;
  s.sim = parse_sim(r, true);
  s.model = parse_model(r);
  s.kernel = parse_kernel(r, s.sim.n);
  s.init = parse_init(r);
  s.law = parse_controls(r);
  r.finish();
  s.model.validate();
  s.init.validate(s.model.d);
  return s;
}

Example1Config parse_example1_config(const IniFile& file) {
  ConfigReader r(file);
  Example1Config c;
  c.phi = r.get_string("experiment", "phi", c.phi);
  c.tol_stderr = r.get_double("experiment", "tol_stderr", c.tol_stderr);
  c.monotone_declared = r.get_bool("experiment", "monotone", c.monotone_declared);
  c.n = r.get_int("sim", "n", c.n);
  c.T = r.get_double("sim", "T", c.T);
  c.dt = r.get_double("sim", "dt", c.dt);
  c.reps = r.get_int("sim", "reps", c.reps);
  c.seed = r.get_u64("sim", "seed", c.seed);
  c.workers = r.get_int("sim", "workers", 0);
  c.init = parse_init(r);
  r.finish();
  return c;
}

Example2Config parse_example2_config(const IniFile& file) {
  ConfigReader r(file);
  Example2Config c;
  c.cost = r.get_string("experiment", "cost", c.cost);
  c.graphon = r.get_string("experiment", "graphon", c.graphon);
  c.b1_scale = r.get_double("experiment", "b1_scale", c.b1_scale);
  c.quad_points = r.get_int("experiment", "quad_points", c.quad_points);
  c.tol_stderr = r.get_double("experiment", "tol_stderr", c.tol_stderr);
  c.declare_concave = r.get_bool("experiment", "concave", c.declare_concave);
  c.n = r.get_int("sim", "n", c.n);
  c.T = r.get_double("sim", "T", c.T);
  c.dt = r.get_double("sim", "dt", c.dt);
  c.reps = r.get_int("sim", "reps", c.reps);
  c.seed = r.get_u64("sim", "seed", c.seed);
  c.workers = r.get_int("sim", "workers", 0);
  c.init = parse_init(r);
  r.finish();
  return c;
}

ConvergeSetup parse_converge_config(const IniFile& file) {
  ConfigReader r(file);
  ConvergeSetup s;
  s.phi = r.get_string("experiment", "phi", s.phi);
  s.rule = r.get_string("experiment", "rule", s.rule);
  s.graphon = r.get_string("experiment", "graphon", s.graphon);
  s.ns = r.get_ints("experiment", "ns");
  s.ref_n = r.get_int("experiment", "ref_n");
  s.cfg.slack_stderr = r.get_double("experiment", "slack_stderr", s.cfg.slack_stderr);
  s.cfg.T = r.get_double("sim", "T", s.cfg.T);
  s.cfg.dt = r.get_double("sim", "dt", s.cfg.dt);
  s.cfg.reps = r.get_int("sim", "reps", s.cfg.reps);
  s.cfg.seed = r.get_u64("sim", "seed", s.cfg.seed);
  s.cfg.workers = r.get_int("sim", "workers", 0);
  s.cfg.init = parse_init(r);
  r.finish();
  return s;
}

KernelConvSetup parse_kernelconv_config(const IniFile& file) {
  ConfigReader r(file);
  KernelConvSetup s;
  s.graphon = r.get_string("experiment", "graphon", s.graphon);
  s.ns = r.get_ints("experiment", "ns");
  s.f_lipschitz = r.get_double("experiment", "f_lipschitz", s.f_lipschitz);
  r.finish();
  return s;
}

ControlFamily OptimizeSetup::make_family() const {
  if (family == "constant_gamma") return ControlFamily::constant_gamma(init_mean, init_sd);
  if (family == "threshold_phi")
    return ControlFamily::threshold_phi(phi, init_mean, init_sd);
  throw BadSpec("config field [experiment] family: unknown family " + family);
}

OptimizeSetup parse_optimize_config(const IniFile& file) {
  ConfigReader r(file);
  OptimizeSetup s;
  s.phi = r.get_string("experiment", "phi", s.phi);
  s.family = r.get_string("experiment", "family", s.family);
  s.graphon = r.get_string("experiment", "graphon", s.graphon);
  bool threshold = s.family == "threshold_phi";
  s.init_mean = r.get_double("experiment", "init_mean", threshold ? 0.0 : 0.5);
  s.init_sd = r.get_double("experiment", "init_sd", threshold ? 0.5 : 0.25);
  s.budget = r.get_int("experiment", "budget", s.budget);
  s.population = r.get_int("experiment", "population", s.population);
  s.elite_fraction = r.get_double("experiment", "elite_fraction", s.elite_fraction);
  s.sim = parse_sim(r, true);
  s.init = parse_init(r);
  r.finish();
  s.make_family();  // family name checked here, before any simulation
  return s;
}

}  // namespace gmfc
