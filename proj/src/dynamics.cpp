#include "gmfc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gmfc/parallel.hpp"
#include "gmfc/textio.hpp"

namespace gmfc {

// ---------------------------------------------------------------- ensemble

ParticleEnsemble ParticleEnsemble::zeros(int n, int d) {
  if (n < 1 || d < 1) throw BadSpec("ensemble needs n >= 1 and d >= 1");
  ParticleEnsemble e;
  e.n = n;
  e.d = d;
  e.states.assign((size_t)n * d, 0.0);
  e.labels.resize(n);
  for (int i = 0; i < n; ++i) e.labels[i] = (i + 1) / (double)n;
  return e;
}

std::vector<double> ParticleEnsemble::state_mean() const {
  std::vector<double> m(d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) m[c] += states[(size_t)i * d + c];
  for (int c = 0; c < d; ++c) m[c] /= n;
  return m;
}

void ParticleEnsemble::require_finite() const {
  for (size_t k = 0; k < states.size(); ++k)
    if (!std::isfinite(states[k]))
      throw NonFiniteState("agent " + fmt_int((int)(k / d)) + " non-finite at t = " +
                           fmt_g(t));
}

// ------------------------------------------------------------- sample sets

InteractionSampleSet InteractionSets::m1(int i) const {
  InteractionSampleSet s;
  s.n = n;
  s.d = d;
  s.adim = adim;
  s.mdim = mdim;
  s.actions = {out_actions.data() + (size_t)i * n * adim, (size_t)n * adim};
  s.states = states;
  s.labels = labels;
  s.marks = {marks.data() + (size_t)i * n * mdim, (size_t)n * mdim};
  return s;
}

InteractionSampleSet InteractionSets::m2(int i) const {
  InteractionSampleSet s = m1(i);
  s.actions = {in_actions.data() + (size_t)i * n * adim, (size_t)n * adim};
  return s;
}

static PopulationContext context_of(const ParticleEnsemble& ens, std::uint64_t seed, int rep,
                                    int step) {
  PopulationContext ctx;
  ctx.t = ens.t;
  ctx.n = ens.n;
  ctx.d = ens.d;
  ctx.states = ens.states;
  ctx.labels = ens.labels;
  ctx.state_mean = ens.state_mean();
  ctx.seed = seed;
  ctx.rep = rep;
  ctx.step = step;
  return ctx;
}

InteractionSets build_interaction_sets(const ParticleEnsemble& ens,
                                       const PairControlMatrix& pairs,
                                       const StepKernel& kernel) {
  if (kernel.n() != ens.n) throw SizeMismatch("kernel size does not match ensemble");
  if (pairs.n() != ens.n) throw SizeMismatch("pair control size does not match ensemble");
  InteractionSets sets;
  sets.n = ens.n;
  sets.d = ens.d;
  sets.adim = pairs.action_dim();
  sets.mdim = kernel.dim();
  sets.states = ens.states;
  sets.labels = ens.labels;
  sets.out_actions.resize((size_t)ens.n * ens.n * sets.adim);
  sets.in_actions.resize((size_t)ens.n * ens.n * sets.adim);
  sets.marks.resize((size_t)ens.n * ens.n * sets.mdim);
  PopulationContext ctx = context_of(ens, 0, 0, 0);
  for (int i = 0; i < ens.n; ++i) {
    std::span<double> row(sets.out_actions.data() + (size_t)i * ens.n * sets.adim,
                          (size_t)ens.n * sets.adim);
    std::span<double> col(sets.in_actions.data() + (size_t)i * ens.n * sets.adim,
                          (size_t)ens.n * sets.adim);
    pairs.fill_row(i, ctx, row);
    pairs.fill_col(i, ctx, col);
    std::span<const double> krow = kernel.row(i);
    std::copy(krow.begin(), krow.end(), sets.marks.begin() + (size_t)i * ens.n * sets.mdim);
  }
  return sets;
}

TerminalSamples terminal_measure(const ParticleEnsemble& ens, const StepKernel& kernel,
                                 int i) {
  if (i < 0 || i >= ens.n) throw IndexOutOfRange("terminal measure index out of range");
  if (kernel.n() != ens.n) throw SizeMismatch("kernel size does not match ensemble");
  TerminalSamples r;
  r.n = ens.n;
  r.d = ens.d;
  r.mdim = kernel.dim();
  r.states = ens.states;
  r.marks = kernel.row(i);
  return r;
}

// ------------------------------------------------------------------ model

void ModelSpec::validate() const {
  if (d < 1) throw BadSpec("model dimension must be >= 1");
  gamma_box.validate();
  alpha_box.validate();
  if ((b1 || b2) && gamma_box.dim != 1)
    throw BadSpec("separable drift takes a scalar interaction action");
  if (b_general && (b0 || b1 || b2 || fused_drift))
    throw BadSpec("general drift excludes the separable drift parts");
  if (l_general && (l0 || l1 || l2))
    throw BadSpec("general running cost excludes the separable cost parts");
  if (drift_bound < 0 || diffusion_floor < 0)
    throw BadSpec("declared bounds must be nonnegative");
}

void check_model_bounds(const ModelSpec& model, const MarkSpace& marks, double state_range,
                        int trials, std::uint64_t seed) {
  model.validate();
  if (model.drift_bound <= 0 && model.diffusion_floor <= 0) return;  // nothing declared
  if (model.diffusion_floor > 0 && !model.sigma)
    throw DomainViolation("declared diffusion floor with no diffusion");
  CounterRng rng = keyed_rng(seed, kStreamTest);
  int d = model.d;
  std::vector<double> x(d), xj(d), mark(marks.dim), a(model.alpha_box.dim);
  std::vector<double> g1(model.gamma_box.dim), g2(model.gamma_box.dim);
  std::vector<double> b(d), tmp(d), S((size_t)d * d), z(d);
  for (int trial = 0; trial < trials; ++trial) {
    double t = rng.uniform();
    for (int c = 0; c < d; ++c) x[c] = rng.uniform(-state_range, state_range);
    for (int c = 0; c < d; ++c) xj[c] = rng.uniform(-state_range, state_range);
    double uj = rng.uniform();
    for (int c = 0; c < marks.dim; ++c) mark[c] = rng.uniform(marks.lower[c], marks.upper[c]);
    for (int c = 0; c < model.alpha_box.dim; ++c)
      a[c] = rng.uniform(model.alpha_box.lower[c], model.alpha_box.upper[c]);
    for (int c = 0; c < model.gamma_box.dim; ++c) {
      g1[c] = rng.uniform(model.gamma_box.lower[c], model.gamma_box.upper[c]);
      g2[c] = rng.uniform(model.gamma_box.lower[c], model.gamma_box.upper[c]);
    }
    if (model.drift_bound > 0) {
      std::fill(b.begin(), b.end(), 0.0);
      if (model.b_general) {
        // one-atom sample sets built from the draws
        InteractionSampleSet m1, m2;
        m1.n = 1;
        m1.d = d;
        m1.adim = model.gamma_box.dim;
        m1.mdim = marks.dim;
        m1.actions = g1;
        m1.states = xj;
        m1.labels = {&uj, 1};
        m1.marks = mark;
        m2 = m1;
        m2.actions = g2;
        model.b_general(t, x, uj, m1, m2, a, b);
      } else {
        if (model.b0) {
          model.b0(t, x, a, tmp);
          for (int c = 0; c < d; ++c) b[c] += tmp[c];
        }
        if (model.b1) {
          model.b1(t, mark, x, xj, uj, tmp);
          for (int c = 0; c < d; ++c) b[c] += g1[0] * tmp[c];
        }
        if (model.b2) {
          model.b2(t, mark, x, xj, uj, tmp);
          for (int c = 0; c < d; ++c) b[c] += g2[0] * tmp[c];
        }
      }
      for (int c = 0; c < d; ++c)
        if (std::fabs(b[c]) > model.drift_bound + 1e-9)
          throw DomainViolation("sampled drift " + fmt_g(b[c]) +
                                " violates the declared bound " + fmt_g(model.drift_bound));
    }
    if (model.diffusion_floor > 0) {
      model.sigma(t, x, S);
      double zn = 0;
      do {
        rng.fill_gaussian(z);
        zn = 0;
        for (int c = 0; c < d; ++c) zn += z[c] * z[c];
      } while (zn < 1e-12);
      zn = std::sqrt(zn);
      double q = 0;  // z' s s' z with |z| = 1
      for (int l = 0; l < d; ++l) {
        double v = 0;
        for (int k = 0; k < d; ++k) v += S[(size_t)k * d + l] * z[k] / zn;
        q += v * v;
      }
      if (q < model.diffusion_floor - 1e-9)
        throw DomainViolation("sampled diffusion mass " + fmt_g(q) +
                              " below the declared floor " + fmt_g(model.diffusion_floor));
    }
  }
}

// ------------------------------------------------------------------ config

int SimConfig::steps() const { return (int)std::llround(T / dt); }

void SimConfig::validate() const {
  if (n < 1) throw BadSpec("sim config: n must be >= 1");
  if (!(dt > 0)) throw BadSpec("sim config: dt must be positive");
  if (T < 0) throw BadSpec("sim config: T must be nonnegative");
  double ratio = T / dt;
  if (std::fabs(ratio - std::llround(ratio)) > 1e-9)
    throw BadSpec("sim config: T/dt must be an integer");
  if (reps < 1) throw BadSpec("sim config: reps must be >= 1");
  if (store_stride < 0) throw BadSpec("sim config: store_stride must be >= 0");
  if (workers < 1) throw BadSpec("sim config: workers must be >= 1");
}

// -------------------------------------------------------------------- init

InitSpec InitSpec::dirac(std::vector<double> point) {
  InitSpec s;
  s.family = Family::Dirac;
  s.point = std::move(point);
  return s;
}

InitSpec InitSpec::gaussian(double mean, double stddev) {
  InitSpec s;
  s.family = Family::Gaussian;
  s.mean = mean;
  s.stddev = stddev;
  return s;
}

InitSpec InitSpec::uniform(double lo, double hi) {
  InitSpec s;
  s.family = Family::Uniform;
  s.lo = lo;
  s.hi = hi;
  return s;
}

InitSpec InitSpec::per_label_table(std::vector<std::vector<double>> rows) {
  InitSpec s;
  s.family = Family::PerLabelTable;
  s.table = std::move(rows);
  return s;
}

void InitSpec::validate(int d) const {
  switch (family) {
    case Family::Dirac:
      if ((int)point.size() != d) throw BadSpec("dirac point has wrong dimension");
      break;
    case Family::Gaussian:
      if (!(stddev >= 0)) throw BadSpec("gaussian stddev must be nonnegative");
      break;
    case Family::Uniform:
      if (!(hi >= lo)) throw BadSpec("uniform needs hi >= lo");
      break;
    case Family::PerLabelTable:
      if (table.empty()) throw BadSpec("per-label table is empty");
      for (const auto& row : table)
        if ((int)row.size() != d) throw BadSpec("per-label table row has wrong dimension");
      break;
  }
}

ParticleEnsemble initial_ensemble(const InitSpec& init, int n, int d, std::uint64_t seed,
                                  int rep) {
  init.validate(d);
  ParticleEnsemble ens = ParticleEnsemble::zeros(n, d);
  switch (init.family) {
    case InitSpec::Family::Dirac:
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) ens.states[(size_t)i * d + c] = init.point[c];
      break;
    case InitSpec::Family::Gaussian:
      for (int i = 0; i < n; ++i) {
        CounterRng rng = keyed_rng(seed, kStreamInit, rep, i, 0);
        for (int c = 0; c < d; ++c)
          ens.states[(size_t)i * d + c] = init.mean + init.stddev * rng.gaussian();
      }
      break;
    case InitSpec::Family::Uniform:
      for (int i = 0; i < n; ++i) {
        CounterRng rng = keyed_rng(seed, kStreamInit, rep, i, 0);
        for (int c = 0; c < d; ++c)
          ens.states[(size_t)i * d + c] = rng.uniform(init.lo, init.hi);
      }
      break;
    case InitSpec::Family::PerLabelTable: {
      int K = (int)init.table.size();
      for (int i = 0; i < n; ++i) {
        const std::vector<double>& row = init.table[block_index(ens.labels[i], K)];
        for (int c = 0; c < d; ++c) ens.states[(size_t)i * d + c] = row[c];
      }
      break;
    }
  }
  return ens;
}

// -------------------------------------------------------------- trajectory

const std::vector<double>& Trajectory::terminal_states() const {
  if (snapshots.empty()) throw NoSnapshot("trajectory holds no snapshots");
  return snapshots.back();
}

ControlLaw ControlLaw::lifted(InteractionControl g, RegularControl a) {
  ControlLaw law;
  law.gamma = std::move(g);
  law.alpha = std::move(a);
  return law;
}

ControlLaw ControlLaw::relaxed_law(RelaxedInteractionControl gbar, RegularControl a) {
  ControlLaw law;
  law.use_relaxed = true;
  law.relaxed = std::move(gbar);
  law.alpha = std::move(a);
  return law;
}

// ------------------------------------------------------------------- step

void euler_step(ParticleEnsemble& ens, const ModelSpec& model,
                const PairControlMatrix& pairs, const StepKernel& kernel, double dt,
                const StepKey& key, StepWorkspace* ws, double* cost) {
  if (!(dt > 0)) throw BadSpec("dt must be positive");
  if (kernel.n() != ens.n) throw SizeMismatch("kernel size does not match ensemble");
  if (pairs.n() != ens.n) throw SizeMismatch("pair control size does not match ensemble");
  StepWorkspace local;
  StepWorkspace& w = ws ? *ws : local;
  const int n = ens.n, d = ens.d;
  const int adim = pairs.action_dim();
  const int rdim = pairs.regular_dim();

  PopulationContext ctx = context_of(ens, key.seed, key.rep, key.step);

  const bool need_sets = (bool)model.b_general || (bool)model.l_general;
  InteractionSets sets;
  if (need_sets) sets = build_interaction_sets(ens, pairs, kernel);

  w.next_states.resize((size_t)n * d);
  w.gamma_row.resize((size_t)n * adim);
  w.gamma_col.resize((size_t)n * adim);
  w.coef.resize(d);
  w.accum.resize(d);
  w.drift.resize(d);
  w.act.resize(rdim);
  w.sigma_mat.resize((size_t)d * d);
  w.noise.resize(d);

  const double sqdt = std::sqrt(dt);
  const bool want_cost =
      cost != nullptr && ((bool)model.l0 || (bool)model.l1 || (bool)model.l2 ||
                          (bool)model.l_general);
  double run_acc = 0;

  for (int i = 0; i < n; ++i) {
    std::span<const double> xi = ens.state(i);
    if (rdim > 0) pairs.eval_regular(i, ctx, w.act);
    std::span<const double> a(w.act.data(), (size_t)rdim);

    double* drift = w.drift.data();
    for (int k = 0; k < d; ++k) drift[k] = 0.0;
    bool row_filled = false, col_filled = false;

    if (model.b_general) {
      model.b_general(ctx.t, xi, ens.labels[i], sets.m1(i), sets.m2(i), a, w.drift);
    } else {
      if (model.b0) {
        model.b0(ctx.t, xi, a, w.coef);
        for (int k = 0; k < d; ++k) drift[k] += w.coef[k];
      }
      if (model.fused_drift) {
        model.fused_drift(i, ctx, kernel, w.coef);
        for (int k = 0; k < d; ++k) drift[k] += w.coef[k];
      } else {
        if (model.b1) {
          pairs.fill_row(i, ctx, w.gamma_row);
          row_filled = true;
          double* acc = w.accum.data();
          for (int k = 0; k < d; ++k) acc[k] = 0.0;
          for (int j = 0; j < n; ++j) {
            model.b1(ctx.t, kernel.mark(i, j), xi, ctx.state(j), ens.labels[j], w.coef);
            double gij = w.gamma_row[j];
            for (int k = 0; k < d; ++k) acc[k] += gij * w.coef[k];
          }
          for (int k = 0; k < d; ++k) drift[k] += acc[k] / n;
        }
        if (model.b2) {
          pairs.fill_col(i, ctx, w.gamma_col);
          col_filled = true;
          double* acc = w.accum.data();
          for (int k = 0; k < d; ++k) acc[k] = 0.0;
          for (int j = 0; j < n; ++j) {
            model.b2(ctx.t, kernel.mark(i, j), xi, ctx.state(j), ens.labels[j], w.coef);
            double gji = w.gamma_col[j];
            for (int k = 0; k < d; ++k) acc[k] += gji * w.coef[k];
          }
          for (int k = 0; k < d; ++k) drift[k] += acc[k] / n;
        }
      }
    }

    if (want_cost) {
      if (model.l_general) {
        run_acc += model.l_general(ctx.t, xi, ens.labels[i], sets.m1(i), sets.m2(i), a);
      } else {
        if (model.l0) run_acc += model.l0(ctx.t, xi, a);
        if (model.l1) {
          if (!row_filled) {
            pairs.fill_row(i, ctx, w.gamma_row);
            row_filled = true;
          }
          double acc = 0;
          for (int j = 0; j < n; ++j)
            acc += model.l1(ctx.t,
                            {w.gamma_row.data() + (size_t)j * adim, (size_t)adim},
                            kernel.mark(i, j), xi, ctx.state(j), ens.labels[j]);
          run_acc += acc / n;
        }
        if (model.l2) {
          if (!col_filled) {
            pairs.fill_col(i, ctx, w.gamma_col);
            col_filled = true;
          }
          double acc = 0;
          for (int j = 0; j < n; ++j)
            acc += model.l2(ctx.t,
                            {w.gamma_col.data() + (size_t)j * adim, (size_t)adim},
                            kernel.mark(i, j), xi, ctx.state(j), ens.labels[j]);
          run_acc += acc / n;
        }
      }
    }

    double* next = w.next_states.data() + (size_t)i * d;
    if (model.sigma) {
      CounterRng rng = keyed_rng(key.seed, kStreamNoise, key.rep, i, key.step);
      rng.fill_gaussian(w.noise);
      model.sigma(ctx.t, xi, w.sigma_mat);
      for (int k = 0; k < d; ++k) {
        double nk = 0;
        for (int l = 0; l < d; ++l) nk += w.sigma_mat[(size_t)k * d + l] * w.noise[l];
        next[k] = xi[k] + drift[k] * dt + sqdt * nk;
      }
    } else {
      for (int k = 0; k < d; ++k) next[k] = xi[k] + drift[k] * dt;
    }
    for (int k = 0; k < d; ++k)
      if (!std::isfinite(next[k]))
        throw NonFiniteState("agent " + fmt_int(i) + " non-finite at t = " +
                             fmt_g(ens.t + dt));
  }

  std::swap(ens.states, w.next_states);
  ens.t += dt;
  if (want_cost) *cost += dt * run_acc / n;
}

// --------------------------------------------------------------- simulate

static bool same_box(const ActionBox& a, const ActionBox& b) {
  return a.dim == b.dim && a.lower == b.lower && a.upper == b.upper;
}

TrajectoryBundle simulate(const ModelSpec& model, const ControlLaw& law,
                          const StepKernel& kernel, const InitSpec& init,
                          const SimConfig& cfg) {
  model.validate();
  cfg.validate();
  init.validate(model.d);
  if (kernel.n() != cfg.n) throw SizeMismatch("kernel size does not match configured n");
  const ActionBox& gbox = law.use_relaxed ? law.relaxed.box() : law.gamma.box();
  if (!same_box(gbox, model.gamma_box))
    throw BadSpec("interaction control box does not match the model");
  if (!same_box(law.alpha.box(), model.alpha_box))
    throw BadSpec("regular control box does not match the model");

  const int steps = cfg.steps();
  TrajectoryBundle bundle;
  bundle.n = cfg.n;
  bundle.d = model.d;
  bundle.T = cfg.T;
  bundle.dt = cfg.dt;
  bundle.reps.resize(cfg.reps);

  parallel_for(cfg.reps, cfg.workers, [&](int rep) {
    try {
      ParticleEnsemble ens = initial_ensemble(init, cfg.n, model.d, cfg.seed, rep);
      Trajectory tr;
      tr.rep = rep;
      tr.snap_times.push_back(0.0);
      tr.snapshots.push_back(ens.states);
      PairControlMatrix pairs;
      if (!law.use_relaxed) pairs = lift_to_nplayer(law.gamma, law.alpha, cfg.n);
      StepWorkspace ws;
      for (int s = 0; s < steps; ++s) {
        if (law.use_relaxed) {
          CounterRng rng = keyed_rng(cfg.seed, kStreamRelaxed, rep, 0, s);
          pairs = sample_relaxed_realization(law.relaxed, cfg.n, ens.t, ens.states,
                                             ens.labels, rng);
          pairs.set_regular(law.alpha);
        }
        euler_step(ens, model, pairs, kernel, cfg.dt, StepKey{cfg.seed, rep, s}, &ws,
                   &tr.running_cost);
        int done = s + 1;
        if (done == steps || (cfg.store_stride > 0 && done % cfg.store_stride == 0)) {
          if (ens.t > tr.snap_times.back()) {
            tr.snap_times.push_back(ens.t);
            tr.snapshots.push_back(ens.states);
          }
        }
      }
      if (model.g) {
        double acc = 0;
        for (int i = 0; i < cfg.n; ++i)
          acc += model.g(ens.state(i), terminal_measure(ens, kernel, i));
        tr.terminal_cost = acc / cfg.n;
      }
      bundle.reps[rep] = std::move(tr);
    } catch (const NonFiniteState& e) {
      throw NonFiniteState("replication " + fmt_int(rep) + ": " + e.what());
    }
  });
  return bundle;
}

McSummary evaluate_cost(const TrajectoryBundle& bundle) {
  if (bundle.reps.empty()) throw BadSpec("no replications to evaluate");
  std::vector<double> totals(bundle.reps.size());
  for (size_t r = 0; r < bundle.reps.size(); ++r) totals[r] = bundle.reps[r].total_cost();
  return mc_summary(totals);
}

// -------------------------------------------------------------------- csv

void write_trajectory_csv(const TrajectoryBundle& bundle, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadSpec("cannot open " + path + " for writing");
  out << "t,rep,agent";
  for (int c = 1; c <= bundle.d; ++c) out << ",x_" << c;
  out << "\n";
  for (const Trajectory& tr : bundle.reps)
    for (size_t s = 0; s < tr.snap_times.size(); ++s)
      for (int i = 0; i < bundle.n; ++i) {
        out << fmt_g(tr.snap_times[s]) << ',' << tr.rep << ',' << i;
        for (int c = 0; c < bundle.d; ++c)
          out << ',' << fmt_g(tr.snapshots[s][(size_t)i * bundle.d + c]);
        out << "\n";
      }
}

void write_cost_summary_csv(const std::string& model_id, const SimConfig& cfg,
                            const McSummary& cost, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadSpec("cannot open " + path + " for writing");
  out << "model,n,dt,M,J_mean,J_stderr\n";
  out << model_id << ',' << cfg.n << ',' << fmt_g(cfg.dt) << ',' << cfg.reps << ','
      << fmt_g(cost.mean) << ',' << fmt_g(cost.stderror) << "\n";
}

}  // namespace gmfc
