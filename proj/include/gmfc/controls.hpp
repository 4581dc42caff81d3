#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gmfc/errors.hpp"
#include "gmfc/rng.hpp"

// Controls: per-agent (regular) and per-pair (interaction) feedback maps,
// their randomized versions carrying auxiliary uniforms, and the n-player
// pair matrix obtained by lifting.  All evaluators are pure; anything
// random is drawn outside and passed in, so replications never share state.

namespace gmfc {

struct ActionBox {
  int dim = 1;
  std::vector<double> lower{0.0};
  std::vector<double> upper{1.0};

  static ActionBox interval(double lo, double hi);
  static ActionBox box(std::vector<double> lo, std::vector<double> hi);
  void validate() const;
  void clamp(std::span<double> a) const;
};

void clamp_action(std::span<double> a, const ActionBox& box);
std::vector<double> clamp_action(std::vector<double> a, const ActionBox& box);

// Per-step frozen view of the population, built by the integrator from the
// pre-step ensemble.  Controls that need the empirical law read from here,
// which keeps pair evaluation pure and thread-safe.
struct PopulationContext {
  double t = 0;
  int n = 0;
  int d = 1;
  std::span<const double> states;  // n*d
  std::span<const double> labels;  // n, fixed to (i+1)/n
  std::vector<double> state_mean;  // d entries
  std::uint64_t seed = 0;          // run seed, for controls that draw their own noise
  int rep = 0;
  int step = 0;

  std::span<const double> state(int i) const {
    return {states.data() + (size_t)i * d, (size_t)d};
  }
};

// Scalar pair potential Phi(t, x, y, m): the measure argument is realized
// as the population context.  The optional row form evaluates Phi against
// every agent j at once; families that can batch install it for the O(n^2)
// inner loops.
struct PhiFn {
  std::function<double(double t, std::span<const double> x, std::span<const double> y,
                       const PopulationContext* ctx)>
      scalar;
  std::function<void(double t, std::span<const double> x, const PopulationContext& ctx,
                     std::span<double> out)>
      row;  // out[j] = Phi(t, x, X_j, ctx); optional

  void fill_row(double t, std::span<const double> x, const PopulationContext& ctx,
                std::span<double> out) const;
};

class RegularControl {
 public:
  enum class Family { Constant, Threshold, AffineClamped, Table, Custom };

  RegularControl() = default;

  int dim() const { return box_.dim; }
  const ActionBox& box() const { return box_; }
  Family family() const { return family_; }

  // a = alpha(t, x, u), clamped into the box
  void eval(double t, std::span<const double> x, double u, std::span<double> out) const;

  static RegularControl constant(std::vector<double> action, ActionBox box);
  // a = below if x[0] <= cut else above
  static RegularControl threshold(double cut, std::vector<double> below,
                                  std::vector<double> above, ActionBox box);
  // a = clamp(bias + A x + label_coef * u); A is dim x d row-major
  static RegularControl affine_clamped(int d, std::vector<double> bias,
                                       std::vector<double> matrix,
                                       std::vector<double> label_coef, ActionBox box);
  // a = table[block of u on the uniform K-grid]; K action vectors
  static RegularControl table(std::vector<std::vector<double>> entries, ActionBox box);
  static RegularControl custom(
      std::function<void(double, std::span<const double>, double, std::span<double>)> fn,
      ActionBox box);

 private:
  Family family_ = Family::Constant;
  ActionBox box_;
  std::function<void(double, std::span<const double>, double, std::span<double>)> fn_;
};

class InteractionControl {
 public:
  enum class Family { Constant, BangBangPhi, ProductForm, Table, Custom };

  InteractionControl() = default;

  int dim() const { return box_.dim; }
  const ActionBox& box() const { return box_; }
  Family family() const { return family_; }

  // gamma(t, x, u, x', u'), clamped into the box
  void eval(double t, std::span<const double> x, double u, std::span<const double> xp,
            double up, const PopulationContext* ctx, std::span<double> out) const;

  // out[j*dim..] = gamma(t, x_i, u_i, X_j, u_j) for every j (outgoing row)
  void fill_row(int i, const PopulationContext& ctx, std::span<double> out) const;
  // out[j*dim..] = gamma(t, X_j, u_j, x_i, u_i) for every j (incoming column)
  void fill_col(int i, const PopulationContext& ctx, std::span<double> out) const;

  static InteractionControl constant(std::vector<double> action, ActionBox box);
  // gamma = upper when Phi(t,x,x',ctx) >= 0 else lower
  static InteractionControl bang_bang_phi(PhiFn phi, ActionBox box);
  // gamma = clamp(offset + scale*(au*u + ax*x1)*(bu*u' + bx*x1')); dim 1
  static InteractionControl product_form(double offset, double scale, double au, double ax,
                                         double bu, double bx, ActionBox box);
  // gamma = grid[block(u,K)][block(u',K)]; K*K scalar entries, dim 1
  static InteractionControl table(int grid_n, std::vector<double> entries, ActionBox box);
  static InteractionControl custom(
      std::function<void(double, std::span<const double>, double, std::span<const double>,
                         double, const PopulationContext*, std::span<double>)>
          fn,
      ActionBox box);

  const PhiFn* phi() const { return phi_ ? phi_.get() : nullptr; }

 private:
  Family family_ = Family::Constant;
  ActionBox box_;
  std::function<void(double, std::span<const double>, double, std::span<const double>, double,
                     const PopulationContext*, std::span<double>)>
      fn_;
  std::shared_ptr<PhiFn> phi_;  // kept for bang_bang so models can share it
};

// Randomized interaction control gbar(t, x, u, v, x', u', v', pi) with the
// auxiliary uniforms (v, v', pi).  The wider class with a fourth coupling
// uniform is accepted through from_general, which pins that variable to 0.5.
class RelaxedInteractionControl {
 public:
  using Fn = std::function<void(double t, std::span<const double> x, double u, double v,
                                std::span<const double> xp, double up, double vp, double pi,
                                std::span<double> out)>;
  using GeneralFn =
      std::function<void(double t, std::span<const double> x, double u, double v,
                         std::span<const double> xp, double up, double vp, double vbar,
                         double pi, std::span<double> out)>;

  RelaxedInteractionControl() = default;
  RelaxedInteractionControl(Fn fn, ActionBox box);
  static RelaxedInteractionControl from_general(GeneralFn fn, ActionBox box);

  int dim() const { return box_.dim; }
  const ActionBox& box() const { return box_; }
  void eval(double t, std::span<const double> x, double u, double v,
            std::span<const double> xp, double up, double vp, double pi,
            std::span<double> out) const;

  // declared structure; when the evaluator ignores states, labels and time
  // the barycentric projection collapses to a constant after one quadrature
  bool depends_on_state = true;
  bool depends_on_labels = true;
  bool depends_on_time = true;

 private:
  ActionBox box_;
  Fn fn_;
};

// Average of gbar over (v, v', pi) by a tensor-product midpoint rule with
// quad_points nodes per axis; lands inside the box by convexity.
InteractionControl barycentric_projection(const RelaxedInteractionControl& gbar,
                                          int quad_points);

// The n-player pair control: gamma_ij plus the per-agent regular action.
class PairControlMatrix {
 public:
  using PairFn = std::function<void(int i, int j, const PopulationContext&, std::span<double>)>;
  using RegFn = std::function<void(int i, const PopulationContext&, std::span<double>)>;

  PairControlMatrix() = default;

  int n() const { return n_; }
  int action_dim() const { return box_.dim; }
  const ActionBox& box() const { return box_; }
  int regular_dim() const { return reg_dim_; }

  void eval_pair(int i, int j, const PopulationContext& ctx, std::span<double> out) const;
  void fill_row(int i, const PopulationContext& ctx, std::span<double> out) const;
  void fill_col(int i, const PopulationContext& ctx, std::span<double> out) const;
  void eval_regular(int i, const PopulationContext& ctx, std::span<double> out) const;

  // underlying interaction control when this matrix came from a lift
  const InteractionControl* lifted_gamma() const { return gamma_ ? gamma_.get() : nullptr; }

  // attach the per-agent regular action (snapshots built from relaxed
  // controls carry none by default)
  void set_regular(RegularControl alpha);

  static PairControlMatrix custom(int n, ActionBox box, PairFn fn);

 private:
  friend PairControlMatrix lift_to_nplayer(InteractionControl, RegularControl, int);
  friend PairControlMatrix sample_relaxed_realization(const RelaxedInteractionControl&, int,
                                                      double, std::span<const double>,
                                                      std::span<const double>, CounterRng&);
  int n_ = 0;
  int reg_dim_ = 0;
  ActionBox box_;
  PairFn pair_fn_;
  RegFn reg_fn_;
  std::shared_ptr<const InteractionControl> gamma_;  // lift source, optional
  // relaxed snapshot payload
  std::shared_ptr<const RelaxedInteractionControl> gbar_;
  std::vector<double> aux_v_;
  double aux_pi_ = 0;
};

// Feedback lift to n players: pair (i,j) evaluates gamma at
// (t, x_i, u_i, x_j, u_j), agent i's regular action is alpha(t, x_i, u_i).
PairControlMatrix lift_to_nplayer(InteractionControl gamma, RegularControl alpha, int n);

// One time-step realization of a randomized control: draws per-agent
// uniforms V_i and one shared pi from the given stream, then freezes the
// pair actions gbar(t, x_i, u_i, V_i, x_j, u_j, V_j, pi).
PairControlMatrix sample_relaxed_realization(const RelaxedInteractionControl& gbar, int n,
                                             double t, std::span<const double> states,
                                             std::span<const double> labels, CounterRng& rng);

// Deterministic rapidly-oscillating selector on [0,1]^2 reproducing the
// prescribed action frequencies: each 1/n cell is split in the s direction
// into k strips of widths Lambda_i/n (cumulative, in action order), with
// the weights looked up on the coarse m-grid block of the cell.
class ChatteringSelector {
 public:
  ChatteringSelector(std::vector<double> weights, int k, int m, int n,
                     std::vector<std::vector<double>> actions, ActionBox box);

  int k() const { return k_; }
  int action_dim() const { return box_.dim; }
  void eval(double s, double t, std::span<double> out) const;
  // index of the action chosen at (s,t); exposed for the measure checks
  int strip_index(double s, double t) const;
  // cumulative strip boundary offsets within a cell of column block r, row
  // block q: boundary(i) = sum of the first i weights, divided by n
  double strip_boundary(int q, int r, int i) const;

 private:
  int k_ = 0, m_ = 0, n_ = 0;
  std::vector<double> weights_;  // k*m*m, [i][q][r]
  std::vector<std::vector<double>> actions_;
  ActionBox box_;
};

ChatteringSelector chattering_selector(std::vector<double> weights, int k, int m, int n,
                                       std::vector<std::vector<double>> actions,
                                       ActionBox box);

}  // namespace gmfc
