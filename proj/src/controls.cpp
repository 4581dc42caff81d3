#include "gmfc/controls.hpp"

#include <cmath>

#include "gmfc/kernels.hpp"
#include "gmfc/textio.hpp"

namespace gmfc {

ActionBox ActionBox::interval(double lo, double hi) {
  ActionBox b;
  b.dim = 1;
  b.lower = {lo};
  b.upper = {hi};
  b.validate();
  return b;
}

ActionBox ActionBox::box(std::vector<double> lo, std::vector<double> hi) {
  ActionBox b;
  b.dim = (int)lo.size();
  b.lower = std::move(lo);
  b.upper = std::move(hi);
  b.validate();
  return b;
}

void ActionBox::validate() const {
  if (dim < 1) throw BadSpec("action box dim must be >= 1");
  if ((int)lower.size() != dim || (int)upper.size() != dim)
    throw DimensionMismatch("action box bounds do not match dim");
  for (int k = 0; k < dim; ++k)
    if (!(lower[k] <= upper[k]))
      throw BadSpec("action box lower > upper at component " + fmt_int(k));
}

void ActionBox::clamp(std::span<double> a) const {
  if ((int)a.size() != dim) throw DimensionMismatch("action has wrong dim for clamp");
  for (int k = 0; k < dim; ++k) {
    if (a[k] < lower[k]) a[k] = lower[k];
    else if (a[k] > upper[k]) a[k] = upper[k];
  }
}

void clamp_action(std::span<double> a, const ActionBox& box) { box.clamp(a); }

std::vector<double> clamp_action(std::vector<double> a, const ActionBox& box) {
  box.clamp(std::span<double>(a));
  return a;
}

void PhiFn::fill_row(double t, std::span<const double> x, const PopulationContext& ctx,
                     std::span<double> out) const {
  if (row) {
    row(t, x, ctx, out);
    return;
  }
  for (int j = 0; j < ctx.n; ++j) out[j] = scalar(t, x, ctx.state(j), &ctx);
}

// ---------------------------------------------------------------- regular

void RegularControl::eval(double t, std::span<const double> x, double u,
                          std::span<double> out) const {
  if (!fn_) throw BadSpec("regular control not initialized");
  fn_(t, x, u, out);
  box_.clamp(out);
}

RegularControl RegularControl::constant(std::vector<double> action, ActionBox box) {
  if ((int)action.size() != box.dim)
    throw DimensionMismatch("constant action has wrong dim");
  RegularControl c;
  c.family_ = Family::Constant;
  c.box_ = std::move(box);
  c.fn_ = [a = std::move(action)](double, std::span<const double>, double,
                                  std::span<double> out) {
    for (size_t k = 0; k < a.size(); ++k) out[k] = a[k];
  };
  return c;
}

RegularControl RegularControl::threshold(double cut, std::vector<double> below,
                                         std::vector<double> above, ActionBox box) {
  if ((int)below.size() != box.dim || (int)above.size() != box.dim)
    throw DimensionMismatch("threshold actions have wrong dim");
  RegularControl c;
  c.family_ = Family::Threshold;
  c.box_ = std::move(box);
  c.fn_ = [cut, lo = std::move(below), hi = std::move(above)](
              double, std::span<const double> x, double, std::span<double> out) {
    const std::vector<double>& pick = (x[0] <= cut) ? lo : hi;
    for (size_t k = 0; k < pick.size(); ++k) out[k] = pick[k];
  };
  return c;
}

RegularControl RegularControl::affine_clamped(int d, std::vector<double> bias,
                                              std::vector<double> matrix,
                                              std::vector<double> label_coef,
                                              ActionBox box) {
  int dim = box.dim;
  if ((int)bias.size() != dim || (int)label_coef.size() != dim ||
      (int)matrix.size() != dim * d)
    throw DimensionMismatch("affine control parameter sizes do not match");
  RegularControl c;
  c.family_ = Family::AffineClamped;
  c.box_ = std::move(box);
  c.fn_ = [d, dim, b = std::move(bias), A = std::move(matrix), g = std::move(label_coef)](
              double, std::span<const double> x, double u, std::span<double> out) {
    for (int k = 0; k < dim; ++k) {
      double v = b[k] + g[k] * u;
      for (int c2 = 0; c2 < d; ++c2) v += A[(size_t)k * d + c2] * x[c2];
      out[k] = v;
    }
  };
  return c;
}

RegularControl RegularControl::table(std::vector<std::vector<double>> entries, ActionBox box) {
  int K = (int)entries.size();
  if (K < 1) throw BadSpec("table control needs at least one entry");
  for (const auto& e : entries)
    if ((int)e.size() != box.dim) throw DimensionMismatch("table entry has wrong dim");
  RegularControl c;
  c.family_ = Family::Table;
  c.box_ = std::move(box);
  c.fn_ = [K, tab = std::move(entries)](double, std::span<const double>, double u,
                                        std::span<double> out) {
    const std::vector<double>& pick = tab[block_index(u, K)];
    for (size_t k = 0; k < pick.size(); ++k) out[k] = pick[k];
  };
  return c;
}

RegularControl RegularControl::custom(
    std::function<void(double, std::span<const double>, double, std::span<double>)> fn,
    ActionBox box) {
  RegularControl c;
  c.family_ = Family::Custom;
  c.box_ = std::move(box);
  c.fn_ = std::move(fn);
  return c;
}

// ------------------------------------------------------------- interaction

void InteractionControl::eval(double t, std::span<const double> x, double u,
                              std::span<const double> xp, double up,
                              const PopulationContext* ctx, std::span<double> out) const {
  if (!fn_) throw BadSpec("interaction control not initialized");
  fn_(t, x, u, xp, up, ctx, out);
  box_.clamp(out);
}

void InteractionControl::fill_row(int i, const PopulationContext& ctx,
                                  std::span<double> out) const {
  int n = ctx.n, dim = box_.dim;
  std::span<const double> xi = ctx.state(i);
  double ui = ctx.labels[i];
  if (family_ == Family::Constant) {
    std::vector<double> a(dim);
    fn_(ctx.t, xi, ui, xi, ui, &ctx, a);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < dim; ++k) out[(size_t)j * dim + k] = a[k];
    return;
  }
  if (family_ == Family::BangBangPhi && dim == 1 && phi_) {
    phi_->fill_row(ctx.t, xi, ctx, out);  // out holds Phi values, reused in place
    double lo = box_.lower[0], hi = box_.upper[0];
    for (int j = 0; j < n; ++j) out[j] = out[j] >= 0.0 ? hi : lo;
    return;
  }
  for (int j = 0; j < n; ++j) {
    std::span<double> cell(out.data() + (size_t)j * dim, dim);
    fn_(ctx.t, xi, ui, ctx.state(j), ctx.labels[j], &ctx, cell);
    box_.clamp(cell);
  }
}

void InteractionControl::fill_col(int i, const PopulationContext& ctx,
                                  std::span<double> out) const {
  int n = ctx.n, dim = box_.dim;
  std::span<const double> xi = ctx.state(i);
  double ui = ctx.labels[i];
  if (family_ == Family::Constant) {
    fill_row(i, ctx, out);  // constants have symmetric rows and columns
    return;
  }
  for (int j = 0; j < n; ++j) {
    std::span<double> cell(out.data() + (size_t)j * dim, dim);
    fn_(ctx.t, ctx.state(j), ctx.labels[j], xi, ui, &ctx, cell);
    box_.clamp(cell);
  }
}

InteractionControl InteractionControl::constant(std::vector<double> action, ActionBox box) {
  if ((int)action.size() != box.dim)
    throw DimensionMismatch("constant action has wrong dim");
  InteractionControl c;
  c.family_ = Family::Constant;
  c.box_ = std::move(box);
  c.fn_ = [a = std::move(action)](double, std::span<const double>, double,
                                  std::span<const double>, double, const PopulationContext*,
                                  std::span<double> out) {
    for (size_t k = 0; k < a.size(); ++k) out[k] = a[k];
  };
  return c;
}

InteractionControl InteractionControl::bang_bang_phi(PhiFn phi, ActionBox box) {
  if (!phi.scalar) throw BadSpec("bang_bang_phi needs a scalar Phi");
  InteractionControl c;
  c.family_ = Family::BangBangPhi;
  c.box_ = std::move(box);
  c.phi_ = std::make_shared<PhiFn>(std::move(phi));
  c.fn_ = [p = c.phi_, lo = c.box_.lower, hi = c.box_.upper](
              double t, std::span<const double> x, double, std::span<const double> xp,
              double, const PopulationContext* ctx, std::span<double> out) {
    bool on = p->scalar(t, x, xp, ctx) >= 0.0;
    const std::vector<double>& pick = on ? hi : lo;
    for (size_t k = 0; k < pick.size(); ++k) out[k] = pick[k];
  };
  return c;
}

InteractionControl InteractionControl::product_form(double offset, double scale, double au,
                                                    double ax, double bu, double bx,
                                                    ActionBox box) {
  if (box.dim != 1) throw BadSpec("product_form is scalar-action only");
  InteractionControl c;
  c.family_ = Family::ProductForm;
  c.box_ = std::move(box);
  c.fn_ = [=](double, std::span<const double> x, double u, std::span<const double> xp,
              double up, const PopulationContext*, std::span<double> out) {
    out[0] = offset + scale * (au * u + ax * x[0]) * (bu * up + bx * xp[0]);
  };
  return c;
}

InteractionControl InteractionControl::table(int grid_n, std::vector<double> entries,
                                             ActionBox box) {
  if (box.dim != 1) throw BadSpec("table interaction control is scalar-action only");
  if (grid_n < 1 || (long long)entries.size() != (long long)grid_n * grid_n)
    throw BadSpec("table needs grid_n*grid_n entries");
  InteractionControl c;
  c.family_ = Family::Table;
  c.box_ = std::move(box);
  c.fn_ = [K = grid_n, tab = std::move(entries)](
              double, std::span<const double>, double u, std::span<const double>, double up,
              const PopulationContext*, std::span<double> out) {
    out[0] = tab[(size_t)block_index(u, K) * K + block_index(up, K)];
  };
  return c;
}

InteractionControl InteractionControl::custom(
    std::function<void(double, std::span<const double>, double, std::span<const double>,
                       double, const PopulationContext*, std::span<double>)>
        fn,
    ActionBox box) {
  InteractionControl c;
  c.family_ = Family::Custom;
  c.box_ = std::move(box);
  c.fn_ = std::move(fn);
  return c;
}

// ----------------------------------------------------------------- relaxed

RelaxedInteractionControl::RelaxedInteractionControl(Fn fn, ActionBox box)
    : box_(std::move(box)), fn_(std::move(fn)) {
  box_.validate();
  if (!fn_) throw BadSpec("relaxed control needs an evaluator");
}

RelaxedInteractionControl RelaxedInteractionControl::from_general(GeneralFn fn,
                                                                  ActionBox box) {
  // the joint coupling uniform of the wider class plays no role in the
  // examples in scope; it is pinned to 0.5
  return RelaxedInteractionControl(
      [g = std::move(fn)](double t, std::span<const double> x, double u, double v,
                          std::span<const double> xp, double up, double vp, double pi,
                          std::span<double> out) { g(t, x, u, v, xp, up, vp, 0.5, pi, out); },
      std::move(box));
}

void RelaxedInteractionControl::eval(double t, std::span<const double> x, double u, double v,
                                     std::span<const double> xp, double up, double vp,
                                     double pi, std::span<double> out) const {
  if (!fn_) throw BadSpec("relaxed control not initialized");
  fn_(t, x, u, v, xp, up, vp, pi, out);
  box_.clamp(out);
}

InteractionControl barycentric_projection(const RelaxedInteractionControl& gbar,
                                          int quad_points) {
  if (quad_points < 1) throw BadSpec("quad_points must be >= 1");
  int Q = quad_points;
  int dim = gbar.dim();
  auto project = [gbar, Q, dim](double t, std::span<const double> x, double u,
                                std::span<const double> xp, double up,
                                std::span<double> out) {
    std::vector<double> acc(dim, 0.0), tmp(dim);
    for (int a = 0; a < Q; ++a)
      for (int b = 0; b < Q; ++b)
        for (int c = 0; c < Q; ++c) {
          gbar.eval(t, x, u, (a + 0.5) / Q, xp, up, (b + 0.5) / Q, (c + 0.5) / Q, tmp);
          for (int k = 0; k < dim; ++k) acc[k] += tmp[k];
        }
    double w = 1.0 / ((double)Q * Q * Q);
    for (int k = 0; k < dim; ++k) out[k] = acc[k] * w;
  };
  if (!gbar.depends_on_state && !gbar.depends_on_labels && !gbar.depends_on_time) {
    std::vector<double> value(dim);
    project(0.0, {}, 0.5, {}, 0.5, value);
    return InteractionControl::constant(clamp_action(std::move(value), gbar.box()),
                                        gbar.box());
  }
  return InteractionControl::custom(
      [project](double t, std::span<const double> x, double u, std::span<const double> xp,
                double up, const PopulationContext*, std::span<double> out) {
        project(t, x, u, xp, up, out);
      },
      gbar.box());
}

// -------------------------------------------------------------- pair matrix

void PairControlMatrix::eval_pair(int i, int j, const PopulationContext& ctx,
                                  std::span<double> out) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_)
    throw IndexOutOfRange("pair index out of range");
  pair_fn_(i, j, ctx, out);
}

void PairControlMatrix::fill_row(int i, const PopulationContext& ctx,
                                 std::span<double> out) const {
  if (gamma_) {
    gamma_->fill_row(i, ctx, out);
    return;
  }
  int dim = box_.dim;
  for (int j = 0; j < n_; ++j)
    pair_fn_(i, j, ctx, std::span<double>(out.data() + (size_t)j * dim, dim));
}

void PairControlMatrix::fill_col(int i, const PopulationContext& ctx,
                                 std::span<double> out) const {
  if (gamma_) {
    gamma_->fill_col(i, ctx, out);
    return;
  }
  int dim = box_.dim;
  for (int j = 0; j < n_; ++j)
    pair_fn_(j, i, ctx, std::span<double>(out.data() + (size_t)j * dim, dim));
}

void PairControlMatrix::eval_regular(int i, const PopulationContext& ctx,
                                     std::span<double> out) const {
  if (reg_dim_ == 0) return;
  reg_fn_(i, ctx, out);
}

void PairControlMatrix::set_regular(RegularControl alpha) {
  reg_dim_ = alpha.dim();
  reg_fn_ = [a = std::move(alpha)](int i, const PopulationContext& ctx,
                                   std::span<double> out) {
    a.eval(ctx.t, ctx.state(i), ctx.labels[i], out);
  };
}

PairControlMatrix PairControlMatrix::custom(int n, ActionBox box, PairFn fn) {
  if (n < 1) throw BadSpec("pair control needs n >= 1");
  PairControlMatrix p;
  p.n_ = n;
  p.box_ = std::move(box);
  p.pair_fn_ = std::move(fn);
  return p;
}

PairControlMatrix lift_to_nplayer(InteractionControl gamma, RegularControl alpha, int n) {
  if (n < 1) throw BadSpec("lift needs n >= 1");
  PairControlMatrix p;
  p.n_ = n;
  p.box_ = gamma.box();
  p.gamma_ = std::make_shared<const InteractionControl>(std::move(gamma));
  p.reg_dim_ = alpha.dim();
  auto g = p.gamma_;
  p.pair_fn_ = [g](int i, int j, const PopulationContext& ctx, std::span<double> out) {
    g->eval(ctx.t, ctx.state(i), ctx.labels[i], ctx.state(j), ctx.labels[j], &ctx, out);
  };
  p.reg_fn_ = [a = std::move(alpha)](int i, const PopulationContext& ctx,
                                     std::span<double> out) {
    a.eval(ctx.t, ctx.state(i), ctx.labels[i], out);
  };
  return p;
}

PairControlMatrix sample_relaxed_realization(const RelaxedInteractionControl& gbar, int n,
                                             double t, std::span<const double> states,
                                             std::span<const double> labels,
                                             CounterRng& rng) {
  if (n < 1) throw BadSpec("relaxed realization needs n >= 1");
  if ((int)labels.size() != n || states.size() % n != 0)
    throw SizeMismatch("state/label arrays do not match n");
  PairControlMatrix p;
  p.n_ = n;
  p.box_ = gbar.box();
  p.gbar_ = std::make_shared<const RelaxedInteractionControl>(gbar);
  p.aux_v_.resize(n);
  for (int i = 0; i < n; ++i) p.aux_v_[i] = rng.uniform();
  p.aux_pi_ = rng.uniform();
  // freeze the sampling-time data so the snapshot is self-contained
  int d = n > 0 ? (int)(states.size() / n) : 1;
  auto frozen = std::make_shared<const std::vector<double>>(states.begin(), states.end());
  auto flab = std::make_shared<const std::vector<double>>(labels.begin(), labels.end());
  auto g = p.gbar_;
  auto v = std::make_shared<const std::vector<double>>(p.aux_v_);
  double pi = p.aux_pi_;
  p.pair_fn_ = [g, v, pi, t, d, frozen, flab](int i, int j, const PopulationContext&,
                                              std::span<double> out) {
    std::span<const double> xi(frozen->data() + (size_t)i * d, (size_t)d);
    std::span<const double> xj(frozen->data() + (size_t)j * d, (size_t)d);
    g->eval(t, xi, (*flab)[i], (*v)[i], xj, (*flab)[j], (*v)[j], pi, out);
  };
  return p;
}

// -------------------------------------------------------------- chattering

ChatteringSelector::ChatteringSelector(std::vector<double> weights, int k, int m, int n,
                                       std::vector<std::vector<double>> actions,
                                       ActionBox box)
    : k_(k), m_(m), n_(n), weights_(std::move(weights)), actions_(std::move(actions)),
      box_(std::move(box)) {
  if (k_ < 1 || m_ < 1 || n_ < 1) throw BadSpec("chattering sizes must be >= 1");
  if (n_ % m_ != 0)
    throw GridMismatch("n = " + fmt_int(n_) + " is not a multiple of m = " + fmt_int(m_));
  if ((long long)weights_.size() != (long long)k_ * m_ * m_)
    throw DimensionMismatch("weights array is not k*m*m");
  if ((int)actions_.size() != k_) throw DimensionMismatch("need k action points");
  for (const auto& a : actions_) {
    if ((int)a.size() != box_.dim) throw DimensionMismatch("action point has wrong dim");
    for (int c = 0; c < box_.dim; ++c)
      if (!(a[c] >= box_.lower[c] && a[c] <= box_.upper[c]))
        throw DomainViolation("action point outside the action box");
  }
  for (int q = 0; q < m_; ++q)
    for (int r = 0; r < m_; ++r) {
      double s = 0;
      for (int i = 0; i < k_; ++i) {
        double w = weights_[((size_t)i * m_ + q) * m_ + r];
        if (w < 0) throw WeightsNotNormalized("negative chattering weight");
        s += w;
      }
      if (std::fabs(s - 1.0) > 1e-12)
        throw WeightsNotNormalized("weights at block (" + fmt_int(q) + "," + fmt_int(r) +
                                   ") sum to " + fmt_g(s));
    }
}

double ChatteringSelector::strip_boundary(int q, int r, int i) const {
  double cum = 0;
  for (int e = 0; e < i; ++e) cum += weights_[((size_t)e * m_ + q) * m_ + r];
  return cum / n_;
}

int ChatteringSelector::strip_index(double s, double t) const {
  int j = block_index(s, n_), l = block_index(t, n_);
  int q = (int)(((long long)j * m_) / n_);
  int r = (int)(((long long)l * m_) / n_);
  double offset = s - (double)j / n_;
  double cum = 0;
  for (int i = 0; i < k_ - 1; ++i) {
    cum += weights_[((size_t)i * m_ + q) * m_ + r];
    if (offset <= cum / n_) return i;
  }
  return k_ - 1;
}

void ChatteringSelector::eval(double s, double t, std::span<double> out) const {
  const std::vector<double>& a = actions_[strip_index(s, t)];
  for (size_t c = 0; c < a.size(); ++c) out[c] = a[c];
}

ChatteringSelector chattering_selector(std::vector<double> weights, int k, int m, int n,
                                       std::vector<std::vector<double>> actions,
                                       ActionBox box) {
  return ChatteringSelector(std::move(weights), k, m, n, std::move(actions),
                            std::move(box));
}

}  // namespace gmfc
