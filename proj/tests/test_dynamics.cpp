// Particle system: interaction sample sets, the explicit step, simulate,
// cost evaluation, samplers, and the flow distance.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "gmfc/dynamics.hpp"
#include "gmfc/metrics.hpp"

using namespace gmfc;

namespace {

StepKernel constant_kernel(int n, double c) {
  std::vector<std::vector<double>> m(n, std::vector<double>(n, c));
  return step_kernel_from_matrix(m);
}

PairControlMatrix lifted_table(int n, const std::vector<std::vector<double>>& entries,
                               ActionBox box) {
  std::vector<double> flat;
  for (const auto& r : entries) flat.insert(flat.end(), r.begin(), r.end());
  return lift_to_nplayer(InteractionControl::table(n, flat, box),
                         RegularControl::constant({0.0}, ActionBox::interval(0, 1)), n);
}

ModelSpec plain_model() {
  ModelSpec m;
  m.d = 1;
  m.gamma_box = ActionBox::interval(0, 1);
  m.alpha_box = ActionBox::interval(0, 1);
  return m;
}

}  // namespace

TEST_CASE("interaction sample sets: hand cases") {
  // n=2: gamma matrix [[0.5, 0.2], [0.9, 0.7]] on the label grid
  ParticleEnsemble ens = ParticleEnsemble::zeros(2, 1);
  ens.states = {1.0, -2.0};
  StepKernel ker = step_kernel_from_matrix({{0.1, 0.2}, {0.3, 0.4}});
  PairControlMatrix pm =
      lifted_table(2, {{0.5, 0.2}, {0.9, 0.7}}, ActionBox::interval(0, 1));
  InteractionSets sets = build_interaction_sets(ens, pm, ker);

  InteractionSampleSet m1 = sets.m1(0), m2 = sets.m2(0);
  CHECK(m1.actions[0] == 0.5);
  CHECK(m1.actions[1] == 0.2);  // gamma_12
  CHECK(m2.actions[0] == 0.5);
  CHECK(m2.actions[1] == 0.9);  // gamma_21
  // shared columns are the same arrays, not copies of each other
  CHECK(m1.states.data() == m2.states.data());
  CHECK(m1.labels.data() == m2.labels.data());
  CHECK(m1.marks.data() == m2.marks.data());
  CHECK(m1.state(1)[0] == -2.0);
  CHECK(m1.labels[1] == 1.0);
  CHECK(m1.mark(0)[0] == 0.1);
  CHECK(m1.mark(1)[0] == 0.2);  // kernel row 1

  // n=1: both sets are the single self-atom
  ParticleEnsemble one = ParticleEnsemble::zeros(1, 1);
  one.states = {3.0};
  StepKernel k1 = constant_kernel(1, 0.6);
  PairControlMatrix p1 = lifted_table(1, {{0.4}}, ActionBox::interval(0, 1));
  InteractionSets s1 = build_interaction_sets(one, p1, k1);
  CHECK(s1.m1(0).actions[0] == 0.4);
  CHECK(s1.m2(0).actions[0] == 0.4);
  CHECK(s1.m1(0).state(0)[0] == 3.0);
  CHECK(s1.m1(0).labels[0] == 1.0);
  CHECK(s1.m1(0).mark(0)[0] == 0.6);

  ParticleEnsemble bad = ParticleEnsemble::zeros(3, 1);
  CHECK_THROWS_AS(build_interaction_sets(bad, pm, ker), SizeMismatch);
}

TEST_CASE("interaction sample sets: symmetric controls and fuzzed invariants") {
  CounterRng rng = keyed_rng(7, kStreamTest, 0);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 1 + (int)(rng.uniform() * 16.0);
    ParticleEnsemble ens = ParticleEnsemble::zeros(n, 1);
    for (auto& x : ens.states) x = rng.uniform(-2, 2);
    std::vector<std::vector<double>> cells(n, std::vector<double>(n));
    for (auto& row : cells)
      for (auto& c : row) c = rng.uniform(0, 1);
    StepKernel ker = step_kernel_from_matrix(cells);
    ActionBox box = ActionBox::interval(0, 1);
    // symmetric control: gamma = u*u'
    PairControlMatrix pm = lift_to_nplayer(
        InteractionControl::product_form(0, 1, 1, 0, 1, 0, box),
        RegularControl::constant({0.0}, ActionBox::interval(0, 1)), n);
    InteractionSets sets = build_interaction_sets(ens, pm, ker);
    // (state,label) columns equal the ensemble's empirical measure exactly
    CHECK(sets.states == ens.states);
    CHECK(sets.labels == ens.labels);
    for (int i = 0; i < n; ++i) {
      InteractionSampleSet m1 = sets.m1(i), m2 = sets.m2(i);
      for (int j = 0; j < n; ++j) {
        CHECK(m1.mark(j)[0] == ker.mark(i, j)[0]);  // mark column = kernel row i
        CHECK(m2.mark(j)[0] == ker.mark(i, j)[0]);
        CHECK(m1.action(j)[0] == m2.action(j)[0]);  // symmetry
      }
    }
  }
}

TEST_CASE("terminal measure") {
  ParticleEnsemble ens = ParticleEnsemble::zeros(2, 1);
  ens.states = {1.5, -0.5};
  StepKernel ker = step_kernel_from_matrix({{0.1, 0.2}, {0.3, 0.4}});
  TerminalSamples r = terminal_measure(ens, ker, 0);
  CHECK(r.n == 2);
  CHECK(r.state(0)[0] == 1.5);
  CHECK(r.state(1)[0] == -0.5);
  CHECK(r.mark(0)[0] == 0.1);
  CHECK(r.mark(1)[0] == 0.2);
  CHECK_THROWS_AS(terminal_measure(ens, ker, 2), IndexOutOfRange);
  CHECK_THROWS_AS(terminal_measure(ens, ker, -1), IndexOutOfRange);

  StepKernel kc = constant_kernel(2, 0.9);
  TerminalSamples rc = terminal_measure(ens, kc, 1);
  CHECK(rc.mark(0)[0] == 0.9);
  CHECK(rc.mark(1)[0] == 0.9);
}

TEST_CASE("model validation") {
  ModelSpec m = plain_model();
  m.b_general = [](double, std::span<const double>, double, const InteractionSampleSet&,
                   const InteractionSampleSet&, std::span<const double>,
                   std::span<double> out) { out[0] = 0; };
  m.b1 = [](double, std::span<const double>, std::span<const double>,
            std::span<const double>, double, std::span<double> out) { out[0] = 0; };
  CHECK_THROWS_AS(m.validate(), BadSpec);

  ModelSpec m2 = plain_model();
  m2.gamma_box = ActionBox::box({0, 0}, {1, 1});
  m2.b1 = [](double, std::span<const double>, std::span<const double>,
             std::span<const double>, double, std::span<double> out) { out[0] = 0; };
  CHECK_THROWS_AS(m2.validate(), BadSpec);

  ModelSpec m3 = plain_model();
  m3.l_general = [](double, std::span<const double>, double, const InteractionSampleSet&,
                    const InteractionSampleSet&, std::span<const double>) { return 0.0; };
  m3.l0 = [](double, std::span<const double>, std::span<const double>) { return 1.0; };
  CHECK_THROWS_AS(m3.validate(), BadSpec);
}

TEST_CASE("declared bound spot checks") {
  ModelSpec ok = plain_model();
  ok.b0 = [](double, std::span<const double> x, std::span<const double>,
             std::span<double> out) { out[0] = std::sin(x[0]); };
  ok.sigma = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  ok.drift_bound = 1.0;
  ok.diffusion_floor = 0.5;
  check_model_bounds(ok, MarkSpace::unit_interval(), 3.0, 200, 11);  // no throw

  ModelSpec tight = ok;
  tight.drift_bound = 0.5;
  CHECK_THROWS_AS(check_model_bounds(tight, MarkSpace::unit_interval(), 3.0, 200, 11),
                  DomainViolation);

  ModelSpec weak = ok;
  weak.sigma = [](double, std::span<const double>, std::span<double> out) { out[0] = 0.1; };
  CHECK_THROWS_AS(check_model_bounds(weak, MarkSpace::unit_interval(), 3.0, 200, 11),
                  DomainViolation);

  ModelSpec nosigma = plain_model();
  nosigma.diffusion_floor = 0.5;
  CHECK_THROWS_AS(check_model_bounds(nosigma, MarkSpace::unit_interval(), 3.0, 10, 11),
                  DomainViolation);
}

TEST_CASE("sim config") {
  SimConfig c;
  c.n = 4;
  c.T = 1.0;
  c.dt = 0.25;
  c.validate();
  CHECK(c.steps() == 4);
  c.dt = 0.3;
  CHECK_THROWS_AS(c.validate(), BadSpec);
  c.dt = 0.25;
  c.reps = 0;
  CHECK_THROWS_AS(c.validate(), BadSpec);
  c.reps = 1;
  c.dt = -0.1;
  CHECK_THROWS_AS(c.validate(), BadSpec);
}

TEST_CASE("initial samplers") {
  ParticleEnsemble z = initial_ensemble(InitSpec::dirac({0.0}), 4, 1, 1, 0);
  for (double x : z.states) CHECK(x == 0.0);
  CHECK(z.labels == std::vector<double>{0.25, 0.5, 0.75, 1.0});

  // table with one row per label block reproduces x_i = u_i
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 4; ++i) rows.push_back({(i + 1) / 4.0});
  ParticleEnsemble tab = initial_ensemble(InitSpec::per_label_table(rows), 4, 1, 1, 0);
  CHECK(tab.states == tab.labels);

  ParticleEnsemble g1 = initial_ensemble(InitSpec::gaussian(0, 1), 8, 1, 42, 0);
  ParticleEnsemble g2 = initial_ensemble(InitSpec::gaussian(0, 1), 8, 1, 42, 0);
  ParticleEnsemble g3 = initial_ensemble(InitSpec::gaussian(0, 1), 8, 1, 42, 1);
  CHECK(g1.states == g2.states);
  CHECK(g1.states != g3.states);

  ParticleEnsemble u = initial_ensemble(InitSpec::uniform(2, 3), 16, 1, 5, 0);
  for (double x : u.states) {
    CHECK(x >= 2.0);
    CHECK(x < 3.0);
  }

  CHECK_THROWS_AS(initial_ensemble(InitSpec::dirac({0.0, 0.0}), 4, 1, 1, 0), BadSpec);
  CHECK_THROWS_AS(initial_ensemble(InitSpec::per_label_table({}), 4, 1, 1, 0), BadSpec);
}

TEST_CASE("euler step hand cases") {
  StepKernel ker = constant_kernel(2, 1.0);
  PairControlMatrix ones = lifted_table(2, {{1, 1}, {1, 1}}, ActionBox::interval(0, 1));

  ParticleEnsemble ens = ParticleEnsemble::zeros(2, 1);
  ens.states = {0.0, 2.0};

  // frozen dynamics
  ModelSpec frozen = plain_model();
  ParticleEnsemble f = ens;
  euler_step(f, frozen, ones, ker, 0.5, StepKey{1, 0, 0});
  CHECK(f.states == ens.states);
  CHECK(f.t == 0.5);

  // constant own drift
  ModelSpec one = plain_model();
  one.b0 = [](double, std::span<const double>, std::span<const double>,
              std::span<double> out) { out[0] = 1.0; };
  ParticleEnsemble c = ens;
  euler_step(c, one, ones, ker, 0.1, StepKey{1, 0, 0});
  CHECK(c.states[0] == 0.1);
  CHECK(c.states[1] == 2.1);

  // pairwise mean drift: b1 = x_j with gamma = 1 averages the population
  ModelSpec mf = plain_model();
  mf.b1 = [](double, std::span<const double>, std::span<const double>,
             std::span<const double> xj, double, std::span<double> out) { out[0] = xj[0]; };
  ParticleEnsemble m = ens;
  euler_step(m, mf, ones, ker, 0.5, StepKey{1, 0, 0});
  CHECK(m.states[0] == 0.5);
  CHECK(m.states[1] == 2.5);

  // explosion is reported, not propagated as NaN
  ModelSpec boom = plain_model();
  boom.b0 = [](double, std::span<const double> x, std::span<const double>,
               std::span<double> out) { out[0] = x[0] * x[0]; };
  ParticleEnsemble e = ParticleEnsemble::zeros(2, 1);
  e.states = {1e200, 0.0};
  CHECK_THROWS_WITH_AS(euler_step(e, boom, ones, ker, 1.0, StepKey{1, 0, 0}),
                       doctest::Contains("agent 0"), NonFiniteState);
}

TEST_CASE("simulate: cost quadrature and trivial cases") {
  int n = 4;
  StepKernel ker = constant_kernel(n, 1.0);
  ControlLaw law = ControlLaw::lifted(
      InteractionControl::constant({1.0}, ActionBox::interval(0, 1)),
      RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
  SimConfig cfg;
  cfg.n = n;
  cfg.T = 1.0;
  cfg.dt = 0.125;
  cfg.reps = 3;
  cfg.seed = 9;

  ModelSpec m0 = plain_model();
  TrajectoryBundle b0 = simulate(m0, law, ker, InitSpec::dirac({0.0}), cfg);
  McSummary c0 = evaluate_cost(b0);
  CHECK(c0.mean == 0.0);
  CHECK(c0.stderror == 0.0);

  // unit running cost integrates to T exactly on the dyadic grid
  ModelSpec m1 = plain_model();
  m1.l0 = [](double, std::span<const double>, std::span<const double>) { return 1.0; };
  TrajectoryBundle b1 = simulate(m1, law, ker, InitSpec::dirac({0.0}), cfg);
  for (const Trajectory& tr : b1.reps) {
    CHECK(tr.running_cost == 1.0);
    CHECK(tr.terminal_cost == 0.0);
  }

  // terminal own-state cost of a frozen zero ensemble
  ModelSpec mg = plain_model();
  mg.g = [](std::span<const double> x, const TerminalSamples&) { return x[0]; };
  McSummary cg = evaluate_cost(simulate(mg, law, ker, InitSpec::dirac({0.0}), cfg));
  CHECK(cg.mean == 0.0);

  // g = average of the neighborhood states: double average gives the mean
  ModelSpec mr = plain_model();
  mr.g = [](std::span<const double>, const TerminalSamples& r) {
    double s = 0;
    for (int j = 0; j < r.n; ++j) s += r.state(j)[0];
    return s / r.n;
  };
  SimConfig cfg2 = cfg;
  cfg2.n = 2;
  StepKernel ker2 = constant_kernel(2, 1.0);
  TrajectoryBundle br = simulate(mr, law, ker2,
                                 InitSpec::per_label_table({{1.0}, {3.0}}), cfg2);
  McSummary cr = evaluate_cost(br);
  CHECK(cr.mean == 2.0);
  CHECK(cr.stderror == 0.0);
}

TEST_CASE("simulate: snapshot schedule") {
  ModelSpec m = plain_model();
  StepKernel ker = constant_kernel(2, 1.0);
  ControlLaw law = ControlLaw::lifted(
      InteractionControl::constant({1.0}, ActionBox::interval(0, 1)),
      RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
  SimConfig cfg;
  cfg.n = 2;
  cfg.T = 1.0;
  cfg.dt = 0.25;
  cfg.reps = 1;

  cfg.store_stride = 2;
  TrajectoryBundle b2 = simulate(m, law, ker, InitSpec::dirac({0.0}), cfg);
  CHECK(b2.reps[0].snap_times == std::vector<double>{0.0, 0.5, 1.0});

  cfg.store_stride = 3;
  TrajectoryBundle b3 = simulate(m, law, ker, InitSpec::dirac({0.0}), cfg);
  CHECK(b3.reps[0].snap_times == std::vector<double>{0.0, 0.75, 1.0});

  cfg.store_stride = 0;
  TrajectoryBundle b0 = simulate(m, law, ker, InitSpec::dirac({0.0}), cfg);
  CHECK(b0.reps[0].snap_times == std::vector<double>{0.0, 1.0});
}

namespace {

// the tanh attraction model in its generic separable form
ModelSpec tanh_model() {
  ModelSpec m = plain_model();
  m.b1 = [](double, std::span<const double>, std::span<const double> x,
            std::span<const double> xj, double, std::span<double> out) {
    out[0] = std::tanh(xj[0] - x[0]);
  };
  m.sigma = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  return m;
}

ControlLaw tanh_bang_bang_law() {
  PhiFn phi;
  phi.scalar = [](double, std::span<const double> x, std::span<const double> y,
                  const PopulationContext*) { return std::tanh(y[0] - x[0]); };
  phi.row = [](double, std::span<const double> x, const PopulationContext& ctx,
               std::span<double> out) {
    for (int j = 0; j < ctx.n; ++j) out[j] = std::tanh(ctx.state(j)[0] - x[0]);
  };
  return ControlLaw::lifted(
      InteractionControl::bang_bang_phi(phi, ActionBox::interval(0, 1)),
      RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
}

}  // namespace

TEST_CASE("simulate: worker count never changes the result") {
  ModelSpec m = tanh_model();
  StepKernel ker = constant_kernel(16, 1.0);
  ControlLaw law = tanh_bang_bang_law();
  SimConfig cfg;
  cfg.n = 16;
  cfg.T = 0.5;
  cfg.dt = 0.125;
  cfg.reps = 6;
  cfg.seed = 77;
  cfg.workers = 1;
  TrajectoryBundle a = simulate(m, law, ker, InitSpec::gaussian(0, 1), cfg);
  cfg.workers = 4;
  TrajectoryBundle b = simulate(m, law, ker, InitSpec::gaussian(0, 1), cfg);
  REQUIRE(a.reps.size() == b.reps.size());
  for (size_t r = 0; r < a.reps.size(); ++r) {
    CHECK(a.reps[r].terminal_states() == b.reps[r].terminal_states());
    CHECK(a.reps[r].running_cost == b.reps[r].running_cost);
    CHECK(a.reps[r].terminal_cost == b.reps[r].terminal_cost);
  }
}

TEST_CASE("simulate: fused interaction drift reproduces the generic path bitwise") {
  // generic: bang-bang gamma times the same tanh coefficient; fused: the
  // positive part, accumulated in identical order
  ModelSpec generic = tanh_model();
  ModelSpec fused = tanh_model();
  fused.b1 = nullptr;
  fused.fused_drift = [](int i, const PopulationContext& ctx, const StepKernel&,
                         std::span<double> out) {
    double xi = ctx.state(i)[0];
    double acc = 0.0;
    for (int j = 0; j < ctx.n; ++j) {
      double v = std::tanh(ctx.state(j)[0] - xi);
      if (v >= 0.0) acc += v;
    }
    out[0] = acc / ctx.n;
  };
  StepKernel ker = constant_kernel(12, 1.0);
  ControlLaw law = tanh_bang_bang_law();
  SimConfig cfg;
  cfg.n = 12;
  cfg.T = 0.5;
  cfg.dt = 0.25;
  cfg.reps = 4;
  cfg.seed = 3;
  TrajectoryBundle a = simulate(generic, law, ker, InitSpec::gaussian(0, 1), cfg);
  TrajectoryBundle b = simulate(fused, law, ker, InitSpec::gaussian(0, 1), cfg);
  for (size_t r = 0; r < a.reps.size(); ++r)
    CHECK(a.reps[r].terminal_states() == b.reps[r].terminal_states());
}

TEST_CASE("simulate: deterministic relaxed control equals its lifted version") {
  ActionBox box = ActionBox::interval(0, 1);
  RelaxedInteractionControl det(
      [](double, std::span<const double> x, double, double, std::span<const double> xp,
         double, double, double, std::span<double> out) {
        out[0] = 0.25 + 0.1 * x[0] - 0.1 * xp[0];
      },
      box);
  InteractionControl same = InteractionControl::custom(
      [](double, std::span<const double> x, double, std::span<const double> xp, double,
         const PopulationContext*, std::span<double> out) {
        out[0] = 0.25 + 0.1 * x[0] - 0.1 * xp[0];
      },
      box);
  RegularControl alpha = RegularControl::constant({0.0}, ActionBox::interval(0, 1));
  ModelSpec m = tanh_model();
  m.l1 = [](double, std::span<const double> g, std::span<const double>,
            std::span<const double>, std::span<const double>, double) { return g[0]; };
  StepKernel ker = constant_kernel(8, 1.0);
  SimConfig cfg;
  cfg.n = 8;
  cfg.T = 0.5;
  cfg.dt = 0.25;
  cfg.reps = 2;
  cfg.seed = 21;
  TrajectoryBundle a =
      simulate(m, ControlLaw::relaxed_law(det, alpha), ker, InitSpec::gaussian(0, 1), cfg);
  TrajectoryBundle b =
      simulate(m, ControlLaw::lifted(same, alpha), ker, InitSpec::gaussian(0, 1), cfg);
  for (size_t r = 0; r < a.reps.size(); ++r) {
    CHECK(a.reps[r].terminal_states() == b.reps[r].terminal_states());
    CHECK(a.reps[r].running_cost == b.reps[r].running_cost);
  }
}

TEST_CASE("simulate: Brownian second moment") {
  ModelSpec m = plain_model();
  m.sigma = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  int n = 64;
  StepKernel ker = constant_kernel(n, 1.0);
  ControlLaw law = ControlLaw::lifted(
      InteractionControl::constant({0.0}, ActionBox::interval(0, 1)),
      RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
  SimConfig cfg;
  cfg.n = n;
  cfg.T = 1.0;
  cfg.dt = 0.05;
  cfg.reps = 16;
  cfg.seed = 31;
  TrajectoryBundle b = simulate(m, law, ker, InitSpec::dirac({0.0}), cfg);
  std::vector<double> rep_means(b.reps.size());
  for (size_t r = 0; r < b.reps.size(); ++r) {
    double s = 0;
    for (double x : b.reps[r].terminal_states()) s += x * x;
    rep_means[r] = s / n;
  }
  McSummary s = mc_summary(rep_means);
  CHECK(std::fabs(s.mean - 1.0) <= 4.0 * s.stderror);
}

TEST_CASE("simulate: bounded drift bound is exact without noise") {
  ModelSpec m = plain_model();
  m.b0 = [](double, std::span<const double> x, std::span<const double>,
            std::span<double> out) { out[0] = std::sin(3.0 * x[0]); };
  int n = 16;
  StepKernel ker = constant_kernel(n, 1.0);
  ControlLaw law = ControlLaw::lifted(
      InteractionControl::constant({0.0}, ActionBox::interval(0, 1)),
      RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
  SimConfig cfg;
  cfg.n = n;
  cfg.T = 2.0;
  cfg.dt = 0.125;
  cfg.reps = 1;
  TrajectoryBundle b = simulate(m, law, ker, InitSpec::uniform(-1, 1), cfg);
  const std::vector<double>& x0 = b.reps[0].snapshots.front();
  const std::vector<double>& xT = b.reps[0].terminal_states();
  for (int i = 0; i < n; ++i) CHECK(std::fabs(xT[i] - x0[i]) <= 2.0 + 1e-12);
}

TEST_CASE("simulate: explicit scheme is first order in dt") {
  auto terminal_at = [](double dt) {
    ModelSpec m = plain_model();
    m.b0 = [](double, std::span<const double> x, std::span<const double>,
              std::span<double> out) { out[0] = std::cos(x[0]); };
    StepKernel ker = constant_kernel(1, 1.0);
    ControlLaw law = ControlLaw::lifted(
        InteractionControl::constant({0.0}, ActionBox::interval(0, 1)),
        RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
    SimConfig cfg;
    cfg.n = 1;
    cfg.T = 1.0;
    cfg.dt = dt;
    cfg.reps = 1;
    TrajectoryBundle b = simulate(m, law, ker, InitSpec::dirac({0.3}), cfg);
    return b.reps[0].terminal_states()[0];
  };
  double ref = terminal_at(1.0 / 1024);
  double e8 = std::fabs(terminal_at(1.0 / 8) - ref);
  double e16 = std::fabs(terminal_at(1.0 / 16) - ref);
  CHECK(e8 / e16 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("flow distance") {
  // hand-built bundles: one rep, 4 agents, single snapshot at t=1
  auto mk = [](std::vector<std::vector<double>> rep_states, int n) {
    TrajectoryBundle b;
    b.n = n;
    b.d = 1;
    b.T = 1;
    b.dt = 1;
    for (size_t r = 0; r < rep_states.size(); ++r) {
      Trajectory tr;
      tr.rep = (int)r;
      tr.snap_times = {0.0, 1.0};
      tr.snapshots = {std::vector<double>(n, 0.0), rep_states[r]};
      b.reps.push_back(tr);
    }
    return b;
  };
  TrajectoryBundle a = mk({{0, 1, 2, 3}}, 4);
  TrajectoryBundle shifted = mk({{10, 11, 12, 13}}, 4);
  std::vector<double> t1{1.0};

  auto self_curve = flow_distance(a, a, t1, FlowMode::StateMarginal);
  CHECK(self_curve[0].distance == 0.0);

  auto sm = flow_distance(a, shifted, t1, FlowMode::StateMarginal);
  CHECK(sm[0].distance == doctest::Approx(10.0).epsilon(1e-13));
  auto ls = flow_distance(a, shifted, t1, FlowMode::LabelStratified);
  CHECK(ls[0].distance == doctest::Approx(10.0).epsilon(1e-13));

  // matching empirical laws at different n
  TrajectoryBundle small = mk({{0, 1}}, 2);
  TrajectoryBundle twice = mk({{0, 0, 1, 1}}, 4);
  auto eq = flow_distance(small, twice, t1, FlowMode::StateMarginal);
  CHECK(eq[0].distance == 0.0);

  // stderr across replications
  TrajectoryBundle two_a = mk({{0, 0, 0, 0}, {0, 0, 0, 0}}, 4);
  TrajectoryBundle two_b = mk({{1, 1, 1, 1}, {3, 3, 3, 3}}, 4);
  auto tw = flow_distance(two_a, two_b, t1, FlowMode::StateMarginal);
  CHECK(tw[0].distance == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(tw[0].stderror == doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(flow_distance(a, shifted, std::vector<double>{0.5}, FlowMode::StateMarginal),
                  NoSnapshot);

  // simulated twin runs are identical, so every distance is zero
  ModelSpec m = plain_model();
  StepKernel ker = constant_kernel(4, 1.0);
  ControlLaw law = ControlLaw::lifted(
      InteractionControl::constant({1.0}, ActionBox::interval(0, 1)),
      RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
  SimConfig cfg;
  cfg.n = 4;
  cfg.T = 1.0;
  cfg.dt = 0.25;
  cfg.reps = 2;
  cfg.store_stride = 1;
  TrajectoryBundle s1 = simulate(m, law, ker, InitSpec::uniform(0, 1), cfg);
  TrajectoryBundle s2 = simulate(m, law, ker, InitSpec::uniform(0, 1), cfg);
  std::vector<double> times{0.0, 0.5, 1.0};
  for (const FlowPoint& p : flow_distance(s1, s2, times, FlowMode::LabelStratified))
    CHECK(p.distance == 0.0);
}

TEST_CASE("csv writers") {
  ModelSpec m = plain_model();
  StepKernel ker = constant_kernel(2, 1.0);
  ControlLaw law = ControlLaw::lifted(
      InteractionControl::constant({1.0}, ActionBox::interval(0, 1)),
      RegularControl::constant({0.0}, ActionBox::interval(0, 1)));
  SimConfig cfg;
  cfg.n = 2;
  cfg.T = 0.5;
  cfg.dt = 0.25;
  cfg.reps = 2;
  cfg.store_stride = 1;
  TrajectoryBundle b = simulate(m, law, ker, InitSpec::uniform(0, 1), cfg);

  std::string tpath = "test_traj_out.csv";
  write_trajectory_csv(b, tpath);
  std::ifstream in(tpath);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,rep,agent,x_1");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2 * 3 * 2);  // reps * snapshots * agents
  in.close();
  std::remove(tpath.c_str());

  std::string cpath = "test_cost_out.csv";
  write_cost_summary_csv("demo", cfg, evaluate_cost(b), cpath);
  std::ifstream cin2(cpath);
  std::getline(cin2, line);
  CHECK(line == "model,n,dt,M,J_mean,J_stderr");
  std::getline(cin2, line);
  CHECK(line.substr(0, 5) == "demo,");
  cin2.close();
  std::remove(cpath.c_str());

  std::vector<FlowPoint> curve{{0.5, 0.25, 0.01}};
  std::string dpath = "test_curve_out.csv";
  write_distance_curve_csv(curve, FlowMode::LabelStratified, 4, 8, dpath);
  std::ifstream din(dpath);
  std::getline(din, line);
  CHECK(line == "t,distance,mode,n_a,n_b");
  std::getline(din, line);
  CHECK(line == "0.5,0.25,label_stratified,4,8");
  din.close();
  std::remove(dpath.c_str());
}
