#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gmfc/errors.hpp"

// Step kernels: block-constant maps [0,1]^2 -> E where E is a box in R^l.
// Block (i,j) of an n-kernel covers ((i-1)/n, i/n] x ((j-1)/n, j/n] with the
// left-open right-closed convention; u=0 is assigned to block 1.

namespace gmfc {

struct MarkSpace {
  int dim = 1;
  std::vector<double> lower{0.0};
  std::vector<double> upper{1.0};

  static MarkSpace unit_interval() { return MarkSpace{}; }
  static MarkSpace box(std::vector<double> lo, std::vector<double> hi);

  void validate() const;
  bool contains(std::span<const double> mark) const;
};

// 0-based index of the grid block containing u on the uniform 1/n grid
inline int block_index(double u, int n) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainViolation("coordinate outside [0,1]");
  int b = (int)std::ceil(u * n);
  if (b < 1) b = 1;
  if (b > n) b = n;
  return b - 1;
}

class StepKernel {
 public:
  StepKernel() = default;
  // marks: row-major n*n cells, dim doubles per cell
  StepKernel(int n, MarkSpace space, std::vector<double> marks);

  int n() const { return n_; }
  int dim() const { return space_.dim; }
  const MarkSpace& mark_space() const { return space_; }

  std::span<const double> mark(int i, int j) const;  // 0-based block indices
  std::span<const double> row(int i) const;          // n*dim contiguous cells
  std::span<const double> eval(double u, double v) const;

  double scalar(int i, int j) const { return mark(i, j)[0]; }
  bool is_constant() const;

 private:
  int n_ = 0;
  MarkSpace space_;
  std::vector<double> marks_;
};

// matrix: n rows, each row n cells, each cell dim doubles
StepKernel step_kernel_from_matrix(const std::vector<std::vector<std::vector<double>>>& matrix,
                                   const MarkSpace& space);
// scalar convenience (dim inferred as 1)
StepKernel step_kernel_from_matrix(const std::vector<std::vector<double>>& matrix,
                                   const MarkSpace& space = MarkSpace::unit_interval());

struct AnalyticGraphon {
  int dim = 1;
  MarkSpace space;
  std::function<void(double, double, std::span<double>)> eval;
  double lipschitz = -1.0;  // per-coordinate (1-norm) bound; < 0 means unknown

  static AnalyticGraphon scalar(std::function<double(double, double)> f,
                                MarkSpace space = MarkSpace::unit_interval(),
                                double lipschitz = -1.0);
};

// marks[i][j] = g(i/n, j/n): evaluation at the right-endpoint label grid
StepKernel sample_from_graphon(const AnalyticGraphon& g, int n);

// Scalar block matrix with per-axis block weights; the common currency of
// the cut-norm routines.  Weights are strictly positive and sum to 1.
struct WeightedMatrix {
  int n = 0;
  std::vector<double> values;  // n*n row-major
  std::vector<double> row_w, col_w;

  static WeightedMatrix uniform(int n, std::vector<double> values);
  void validate() const;
  double at(int i, int j) const { return values[(size_t)i * n + j]; }
};

// Common refinement of the uniform 1/na and 1/nb grids: segment widths plus,
// per segment, the index of the covering block on each source grid.
struct GridRefinement {
  std::vector<double> widths;
  std::vector<int> idx_a, idx_b;
  int size() const { return (int)widths.size(); }
};
GridRefinement refine_grids(int na, int nb);

struct CutDistanceResult {
  double value = 0.0;
  bool exact = true;  // false when the heuristic lower bound was used
};

CutDistanceResult cut_distance(const StepKernel& k1, const StepKernel& k2,
                               const std::function<double(std::span<const double>)>& f,
                               int exact_cap = 24, int restarts = 32,
                               std::uint64_t seed = 1u);

double l1_distance(const StepKernel& k1, const StepKernel& k2);

// CSV round trip.  Header line: # stepkernel n=<n> dim=<l> lo=<..> hi=<..>
// then n data lines of n comma-separated cells; components joined by ';'.
StepKernel read_step_kernel_csv(const std::string& path);
void write_step_kernel_csv(const StepKernel& k, const std::string& path);

}  // namespace gmfc
