#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmfc/dynamics.hpp"
#include "gmfc/experiments.hpp"

// Run configuration in INI form: [section] headers, key = value lines, '#'
// or ';' comments.  Schemas are strict per command; a key no getter asked
// for is an error (fail-closed), and error messages name the field.

namespace gmfc {

struct IniEntry {
  std::string section, key, value;
};

struct IniFile {
  std::vector<IniEntry> entries;

  const std::string* find(const std::string& section, const std::string& key) const;
};

IniFile parse_ini_text(const std::string& text);
IniFile load_ini(const std::string& path);

// Marks every key a getter touches; finish() rejects the rest.
class ConfigReader {
 public:
  explicit ConfigReader(IniFile file);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key);
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  double get_double(const std::string& section, const std::string& key);
  double get_double(const std::string& section, const std::string& key, double fallback);
  int get_int(const std::string& section, const std::string& key);
  int get_int(const std::string& section, const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);
  std::vector<double> get_doubles(const std::string& section, const std::string& key);
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  std::vector<double> fallback);
  std::vector<int> get_ints(const std::string& section, const std::string& key);

  void finish() const;  // BadSpec naming the first unconsumed key

 private:
  const std::string* lookup(const std::string& section, const std::string& key);
  IniFile file_;
  std::vector<char> used_;
};

// Worker-count precedence: --workers beats [sim] workers beats GMFC_THREADS
// beats the hardware; 0 means unset at every stage.
int resolve_workers(int cli_value, int config_value);

// Fully resolved simulate run.
struct SimulateSetup {
  ModelSpec model;
  StepKernel kernel;
  ControlLaw law;
  InitSpec init;
  SimConfig sim;  // workers stays 0 until resolved by the caller
};

SimulateSetup parse_simulate_config(const IniFile& file);

Example1Config parse_example1_config(const IniFile& file);
Example2Config parse_example2_config(const IniFile& file);

struct ConvergeSetup {
  std::string phi = "tanh_diff", rule = "bang_bang", graphon = "constant";
  std::vector<int> ns;
  int ref_n = 0;
  SweepConfig cfg;
};

ConvergeSetup parse_converge_config(const IniFile& file);

struct KernelConvSetup {
  std::string graphon = "product";
  std::vector<int> ns;
  double f_lipschitz = 1.0;
};

KernelConvSetup parse_kernelconv_config(const IniFile& file);

struct OptimizeSetup {
  std::string phi = "tanh_diff", family = "constant_gamma", graphon = "constant";
  double init_mean = 0, init_sd = 0;  // resolved per family at parse time
  int budget = 96, population = 16;
  double elite_fraction = 0.25;
  InitSpec init = InitSpec::gaussian(0.0, 1.0);
  SimConfig sim;

  ControlFamily make_family() const;
};

OptimizeSetup parse_optimize_config(const IniFile& file);

}  // namespace gmfc
