// INI run configs: parsing, strict per-command schemas, worker resolution.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "gmfc/config.hpp"

using namespace gmfc;

namespace {

StepKernel small_kernel(int n, double c) {
  std::vector<std::vector<double>> m(n, std::vector<double>(n, c));
  return step_kernel_from_matrix(m);
}

}  // namespace

TEST_CASE("ini text: sections, comments, and malformed lines") {
  IniFile f = parse_ini_text(
      "# leading comment\n"
      "[sim]\n"
      "n = 4\n"
      "  T =  1.5 \n"
      "; also a comment\n"
      "[model]\n"
      "id = social\n");
  REQUIRE(f.entries.size() == 3);
  REQUIRE(f.find("sim", "n"));
  CHECK(*f.find("sim", "n") == "4");
  CHECK(*f.find("sim", "T") == "1.5");
  CHECK(*f.find("model", "id") == "social");
  CHECK(f.find("sim", "missing") == nullptr);

  CHECK_THROWS_WITH_AS(parse_ini_text("n = 4\n"), doctest::Contains("before any section"),
                       BadSpec);
  CHECK_THROWS_AS(parse_ini_text("[sim\nn = 4\n"), BadSpec);
  CHECK_THROWS_AS(parse_ini_text("[]\n"), BadSpec);
  CHECK_THROWS_WITH_AS(parse_ini_text("[sim]\njust words\n"),
                       doctest::Contains("key = value"), BadSpec);
  CHECK_THROWS_WITH_AS(parse_ini_text("[sim]\nn =\n"), doctest::Contains("empty value"),
                       BadSpec);
  CHECK_THROWS_WITH_AS(parse_ini_text("[sim]\nn = 1\nn = 2\n"),
                       doctest::Contains("duplicate"), BadSpec);

  // comments are whole-line only; trailing text stays in the value
  IniFile g = parse_ini_text("[a]\nx = 4 # not a comment\n");
  CHECK(*g.find("a", "x") == "4 # not a comment");
}

TEST_CASE("config reader: typed getters and fail-closed finish") {
  IniFile f = parse_ini_text(
      "[a]\n"
      "x = 1.5\n"
      "n = 7\n"
      "flag = true\n"
      "list = 1, 2.5 ,3\n"
      "ints = 4,5\n"
      "big = 18446744073709551615\n"
      "[b]\n"
      "stray = 1\n");
  ConfigReader r(f);
  CHECK(r.get_double("a", "x") == 1.5);
  CHECK(r.get_int("a", "n") == 7);
  CHECK(r.get_bool("a", "flag", false) == true);
  CHECK(r.get_doubles("a", "list") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(r.get_ints("a", "ints") == std::vector<int>{4, 5});
  CHECK(r.get_u64("a", "big", 0) == 18446744073709551615ull);
  CHECK(r.get_int("a", "absent", 9) == 9);
  CHECK(r.get_string("a", "absent", "dflt") == "dflt");
  CHECK_THROWS_WITH_AS(r.get_string("a", "nope"), doctest::Contains("[a] nope"), BadSpec);
  CHECK_THROWS_WITH_AS(r.finish(), doctest::Contains("stray"), BadSpec);
  CHECK(r.get_int("b", "stray") == 1);
  CHECK_NOTHROW(r.finish());

  ConfigReader bad(parse_ini_text("[a]\nx = abc\nb = maybe\nl = 1,,2\n"));
  CHECK_THROWS_WITH_AS(bad.get_double("a", "x"), doctest::Contains("not a number"), BadSpec);
  CHECK_THROWS_AS(bad.get_bool("a", "b", true), BadSpec);
  CHECK_THROWS_AS(bad.get_ints("a", "l"), BadSpec);
}

TEST_CASE("worker resolution order") {
  CHECK(resolve_workers(3, 5) == 3);
  CHECK(resolve_workers(0, 5) == 5);
  ::setenv("GMFC_THREADS", "2", 1);
  CHECK(resolve_workers(0, 0) == 2);
  CHECK(resolve_workers(4, 0) == 4);
  ::setenv("GMFC_THREADS", "junk", 1);
  CHECK(resolve_workers(0, 0) >= 1);  // unparseable env falls through
  ::unsetenv("GMFC_THREADS");
  CHECK(resolve_workers(0, 0) >= 1);
}

TEST_CASE("simulate config: minimal file resolves with documented defaults") {
  SimulateSetup s = parse_simulate_config(parse_ini_text("[sim]\nn = 4\nT = 0.25\ndt = 0.125\n"));
  CHECK(s.sim.n == 4);
  CHECK(s.sim.reps == 1);
  CHECK(s.sim.seed == 1);
  CHECK(s.sim.workers == 0);  // resolved later against flags and environment
  CHECK(s.model.id == "attraction_tanh_diff");
  CHECK(s.kernel.n() == 4);
  CHECK(s.kernel.scalar(0, 0) == 0.5);
  CHECK_FALSE(s.law.use_relaxed);
  CHECK(s.law.gamma.family() == InteractionControl::Family::Constant);
  CHECK(s.init.family == InitSpec::Family::Gaussian);
  CHECK(s.init.mean == 0.0);
  CHECK(s.init.stddev == 1.0);
}

TEST_CASE("simulate config: schema rejections name the field") {
  CHECK_THROWS_WITH_AS(parse_simulate_config(parse_ini_text("[sim]\nT = 1\ndt = 0.5\n")),
                       doctest::Contains("[sim] n"), BadSpec);
  CHECK_THROWS_WITH_AS(
      parse_simulate_config(parse_ini_text("[sim]\nn = 4\nT = 1\ndt = 0.5\nbogus = 1\n")),
      doctest::Contains("bogus"), BadSpec);
  CHECK_THROWS_WITH_AS(
      parse_simulate_config(
          parse_ini_text("[sim]\nn = 4\nT = 1\ndt = 0.5\n[model]\nphi = mean_gap\n")),
      doctest::Contains("mean_gap"), BadSpec);
  CHECK_THROWS_WITH_AS(
      parse_simulate_config(
          parse_ini_text("[sim]\nn = 4\nT = 1\ndt = 0.5\n[model]\nid = wat\n")),
      doctest::Contains("[model] id"), BadSpec);
  // relaxed law replaces gamma.*, so leftover keys are unknown
  CHECK_THROWS_WITH_AS(
      parse_simulate_config(parse_ini_text("[sim]\nn = 4\nT = 1\ndt = 0.5\n[controls]\n"
                                           "relaxed = true\ngamma.family = constant\n")),
      doctest::Contains("gamma.family"), BadSpec);
}

TEST_CASE("simulate config: models, kernels, controls, init variants") {
  namespace fs = std::filesystem;
  std::string path = (fs::temp_directory_path() / "gmfc_cfg_kernel.csv").string();
  write_step_kernel_csv(small_kernel(4, 0.7), path);

  SimulateSetup s = parse_simulate_config(parse_ini_text(
      "[sim]\nn = 4\nT = 0.25\ndt = 0.125\nreps = 3\nseed = 11\nworkers = 2\n"
      "[model]\nid = social\ncost = linear\nb1_scale = 0.4\n"
      "[kernel]\nsource = matrix\npath = " + path + "\n"
      "[controls]\ngamma.family = bang_bang\ngamma.phi = tanh_diff\n"
      "alpha.family = threshold\nalpha.params = 0.0, 0.2, 0.8\n"
      "[init]\nfamily = dirac\nparams = 0.5\n"));
  CHECK(s.sim.reps == 3);
  CHECK(s.sim.seed == 11);
  CHECK(s.sim.workers == 2);
  CHECK(s.model.id == "social_linear");
  CHECK(s.kernel.scalar(1, 2) == 0.7);
  CHECK(s.law.gamma.family() == InteractionControl::Family::BangBangPhi);
  CHECK(s.law.alpha.family() == RegularControl::Family::Threshold);
  CHECK(s.init.family == InitSpec::Family::Dirac);
  CHECK(s.init.point == std::vector<double>{0.5});

  CHECK_THROWS_WITH_AS(
      parse_simulate_config(parse_ini_text("[sim]\nn = 5\nT = 0.25\ndt = 0.125\n"
                                           "[kernel]\nsource = matrix\npath = " +
                                           path + "\n")),
      doctest::Contains("does not match"), BadSpec);

  SimulateSetup rel = parse_simulate_config(
      parse_ini_text("[sim]\nn = 4\nT = 0.25\ndt = 0.125\n[controls]\nrelaxed = true\n"));
  CHECK(rel.law.use_relaxed);
}

TEST_CASE("experiment configs: defaults and overrides") {
  Example1Config e1 = parse_example1_config(parse_ini_text(""));
  CHECK(e1.phi == "tanh_diff");
  CHECK(e1.n == 200);
  CHECK(e1.reps == 64);
  CHECK(e1.workers == 0);

  e1 = parse_example1_config(parse_ini_text(
      "[experiment]\nphi = const_neg\ntol_stderr = 2.5\nmonotone = false\n"
      "[sim]\nn = 16\nT = 0.25\ndt = 0.0625\nreps = 4\nseed = 7\nworkers = 2\n"));
  CHECK(e1.phi == "const_neg");
  CHECK(e1.tol_stderr == 2.5);
  CHECK_FALSE(e1.monotone_declared);
  CHECK(e1.n == 16);
  CHECK(e1.seed == 7);
  CHECK(e1.workers == 2);

  Example2Config e2 = parse_example2_config(parse_ini_text(
      "[experiment]\ncost = linear\ngraphon = product\nb1_scale = 0.1\nquad_points = 32\n"
      "[sim]\nn = 8\nT = 0.5\ndt = 0.125\n"));
  CHECK(e2.cost == "linear");
  CHECK(e2.graphon == "product");
  CHECK(e2.b1_scale == 0.1);
  CHECK(e2.quad_points == 32);
  CHECK(e2.n == 8);
  CHECK(e2.declare_concave);
}

TEST_CASE("sweep and optimizer configs") {
  CHECK_THROWS_WITH_AS(parse_converge_config(parse_ini_text("[experiment]\nref_n = 32\n")),
                       doctest::Contains("ns"), BadSpec);
  ConvergeSetup c = parse_converge_config(parse_ini_text(
      "[experiment]\nns = 8, 16\nref_n = 32\n[sim]\nT = 0.25\ndt = 0.125\nreps = 2\n"));
  CHECK(c.ns == std::vector<int>{8, 16});
  CHECK(c.ref_n == 32);
  CHECK(c.cfg.reps == 2);
  CHECK(c.phi == "tanh_diff");
  // the sweep schema has no [sim] n; population sizes come from ns
  CHECK_THROWS_WITH_AS(
      parse_converge_config(parse_ini_text(
          "[experiment]\nns = 8\nref_n = 32\n[sim]\nn = 5\nT = 0.25\ndt = 0.125\n")),
      doctest::Contains("[sim] n"), BadSpec);

  KernelConvSetup k = parse_kernelconv_config(
      parse_ini_text("[experiment]\ngraphon = product\nns = 4, 8\nf_lipschitz = 2\n"));
  CHECK(k.graphon == "product");
  CHECK(k.ns == std::vector<int>{4, 8});
  CHECK(k.f_lipschitz == 2.0);
  CHECK_THROWS_AS(parse_kernelconv_config(
                      parse_ini_text("[experiment]\nns = 4\n[sim]\nT = 1\n")),
                  BadSpec);

  OptimizeSetup o = parse_optimize_config(
      parse_ini_text("[experiment]\nfamily = threshold_phi\n[sim]\nn = 8\nT = 0.5\ndt = 0.125\n"));
  CHECK(o.init_mean == 0.0);
  CHECK(o.init_sd == 0.5);
  CHECK(o.make_family().id == "threshold_tanh_diff");
  o = parse_optimize_config(parse_ini_text("[sim]\nn = 8\nT = 0.5\ndt = 0.125\n"));
  CHECK(o.init_mean == 0.5);
  CHECK(o.init_sd == 0.25);
  CHECK(o.make_family().id == "constant_gamma");
  CHECK_THROWS_WITH_AS(
      parse_optimize_config(
          parse_ini_text("[experiment]\nfamily = wat\n[sim]\nn = 8\nT = 0.5\ndt = 0.125\n")),
      doctest::Contains("family"), BadSpec);
}
