#include "gmfc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gmfc/cut_norm.hpp"
#include "gmfc/textio.hpp"

namespace gmfc {

MarkSpace MarkSpace::box(std::vector<double> lo, std::vector<double> hi) {
  MarkSpace s;
  s.dim = (int)lo.size();
  s.lower = std::move(lo);
  s.upper = std::move(hi);
  s.validate();
  return s;
}

void MarkSpace::validate() const {
  if (dim < 1) throw BadSpec("mark space dim must be >= 1");
  if ((int)lower.size() != dim || (int)upper.size() != dim)
    throw DimensionMismatch("mark space bounds do not match dim");
  for (int k = 0; k < dim; ++k)
    if (!(lower[k] <= upper[k]))
      throw BadSpec("mark space lower > upper at component " + fmt_int(k));
}

bool MarkSpace::contains(std::span<const double> mark) const {
  if ((int)mark.size() != dim) return false;
  for (int k = 0; k < dim; ++k)
    if (!(mark[k] >= lower[k] && mark[k] <= upper[k])) return false;
  return true;
}

StepKernel::StepKernel(int n, MarkSpace space, std::vector<double> marks)
    : n_(n), space_(std::move(space)), marks_(std::move(marks)) {
  if (n_ < 1) throw BadSpec("step kernel needs n >= 1");
  space_.validate();
  if ((long long)marks_.size() != (long long)n_ * n_ * space_.dim)
    throw DimensionMismatch("mark array size does not match n*n*dim");
  int d = space_.dim;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      std::span<const double> m(marks_.data() + ((size_t)i * n_ + j) * d, d);
      if (!space_.contains(m))
        throw MarkOutOfBounds("mark (" + fmt_int(i) + "," + fmt_int(j) +
                              ") outside the mark box");
    }
}

std::span<const double> StepKernel::mark(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_)
    throw IndexOutOfRange("block index out of range");
  int d = space_.dim;
  return {marks_.data() + ((size_t)i * n_ + j) * d, (size_t)d};
}

std::span<const double> StepKernel::row(int i) const {
  if (i < 0 || i >= n_) throw IndexOutOfRange("row index out of range");
  int d = space_.dim;
  return {marks_.data() + (size_t)i * n_ * d, (size_t)n_ * d};
}

std::span<const double> StepKernel::eval(double u, double v) const {
  return mark(block_index(u, n_), block_index(v, n_));
}

bool StepKernel::is_constant() const {
  int d = space_.dim;
  for (size_t c = d; c < marks_.size(); ++c)
    if (marks_[c] != marks_[c % d]) return false;
  return true;
}

StepKernel step_kernel_from_matrix(const std::vector<std::vector<std::vector<double>>>& matrix,
                                   const MarkSpace& space) {
  int n = (int)matrix.size();
  if (n < 1) throw NonSquareMatrix("empty matrix");
  std::vector<double> flat;
  flat.reserve((size_t)n * n * space.dim);
  for (int i = 0; i < n; ++i) {
    if ((int)matrix[i].size() != n)
      throw NonSquareMatrix("row " + fmt_int(i) + " has " +
                            fmt_int((long long)matrix[i].size()) + " cells, expected " + fmt_int(n));
    for (int j = 0; j < n; ++j) {
      if ((int)matrix[i][j].size() != space.dim)
        throw DimensionMismatch("cell (" + fmt_int(i) + "," + fmt_int(j) + ") has wrong dim");
      flat.insert(flat.end(), matrix[i][j].begin(), matrix[i][j].end());
    }
  }
  return StepKernel(n, space, std::move(flat));
}

StepKernel step_kernel_from_matrix(const std::vector<std::vector<double>>& matrix,
                                   const MarkSpace& space) {
  int n = (int)matrix.size();
  if (n < 1) throw NonSquareMatrix("empty matrix");
  std::vector<double> flat;
  flat.reserve((size_t)n * n);
  for (int i = 0; i < n; ++i) {
    if ((int)matrix[i].size() != n)
      throw NonSquareMatrix("row " + fmt_int(i) + " has " +
                            fmt_int((long long)matrix[i].size()) + " cells, expected " + fmt_int(n));
    flat.insert(flat.end(), matrix[i].begin(), matrix[i].end());
  }
  return StepKernel(n, space, std::move(flat));
}

AnalyticGraphon AnalyticGraphon::scalar(std::function<double(double, double)> f,
                                        MarkSpace space, double lipschitz) {
  AnalyticGraphon g;
  g.dim = 1;
  g.space = std::move(space);
  g.lipschitz = lipschitz;
  g.eval = [fn = std::move(f)](double u, double v, std::span<double> out) {
    out[0] = fn(u, v);
  };
  return g;
}

StepKernel sample_from_graphon(const AnalyticGraphon& g, int n) {
  if (n < 1) throw BadSpec("sample_from_graphon needs n >= 1");
  int d = g.dim;
  std::vector<double> marks((size_t)n * n * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::span<double> cell(marks.data() + ((size_t)i * n + j) * d, d);
      g.eval((i + 1) / (double)n, (j + 1) / (double)n, cell);
    }
  return StepKernel(n, g.space, std::move(marks));
}

WeightedMatrix WeightedMatrix::uniform(int n, std::vector<double> values) {
  WeightedMatrix m;
  m.n = n;
  m.values = std::move(values);
  m.row_w.assign(n, 1.0 / n);
  m.col_w.assign(n, 1.0 / n);
  m.validate();
  return m;
}

void WeightedMatrix::validate() const {
  if (n < 1) throw NonSquareMatrix("weighted matrix needs n >= 1");
  if ((long long)values.size() != (long long)n * n)
    throw NonSquareMatrix("value array is not n*n");
  if ((int)row_w.size() != n || (int)col_w.size() != n)
    throw DimensionMismatch("weight vectors do not match n");
  double sr = 0, sc = 0;
  for (int i = 0; i < n; ++i) {
    if (!(row_w[i] > 0) || !(col_w[i] > 0))
      throw WeightsNotNormalized("block weights must be strictly positive");
    sr += row_w[i];
    sc += col_w[i];
  }
  if (std::fabs(sr - 1.0) > 1e-9 || std::fabs(sc - 1.0) > 1e-9)
    throw WeightsNotNormalized("block weights must sum to 1");
}

GridRefinement refine_grids(int na, int nb) {
  if (na < 1 || nb < 1) throw BadSpec("grid sizes must be >= 1");
  // merge breakpoints i/na and j/nb exactly, working in units of 1/(na*nb)
  long long L = (long long)na * nb;
  GridRefinement r;
  long long prev = 0;
  int i = 1, j = 1;
  while (i <= na || j <= nb) {
    long long pa = (i <= na) ? (long long)i * nb : L + 1;
    long long pb = (j <= nb) ? (long long)j * na : L + 1;
    long long cur = std::min(pa, pb);
    if (pa == cur) ++i;
    if (pb == cur) ++j;
    r.widths.push_back((double)(cur - prev) / (double)L);
    r.idx_a.push_back((int)(prev / nb));  // prev / (L/na)
    r.idx_b.push_back((int)(prev / na));
    prev = cur;
  }
  return r;
}

static WeightedMatrix refined_difference(const StepKernel& k1, const StepKernel& k2,
                                         const std::function<double(std::span<const double>)>& f) {
  GridRefinement g = refine_grids(k1.n(), k2.n());
  int m = g.size();
  WeightedMatrix w;
  w.n = m;
  w.row_w = g.widths;
  w.col_w = g.widths;
  w.values.resize((size_t)m * m);
  // f on each distinct block of each kernel, cached
  std::vector<double> f1((size_t)k1.n() * k1.n()), f2((size_t)k2.n() * k2.n());
  for (int a = 0; a < k1.n(); ++a)
    for (int b = 0; b < k1.n(); ++b) f1[(size_t)a * k1.n() + b] = f(k1.mark(a, b));
  for (int a = 0; a < k2.n(); ++a)
    for (int b = 0; b < k2.n(); ++b) f2[(size_t)a * k2.n() + b] = f(k2.mark(a, b));
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c)
      w.values[(size_t)r * m + c] =
          f1[(size_t)g.idx_a[r] * k1.n() + g.idx_a[c]] -
          f2[(size_t)g.idx_b[r] * k2.n() + g.idx_b[c]];
  w.validate();
  return w;
}

CutDistanceResult cut_distance(const StepKernel& k1, const StepKernel& k2,
                               const std::function<double(std::span<const double>)>& f,
                               int exact_cap, int restarts, std::uint64_t seed) {
  if (k1.dim() != k2.dim())
    throw DimensionMismatch("kernels have different mark dimensions");
  WeightedMatrix w = refined_difference(k1, k2, f);
  CutDistanceResult out;
  if (w.n <= exact_cap) {
    out.value = cut_norm_exact(w, exact_cap);
    out.exact = true;
  } else {
    out.value = cut_norm_lower_bound(w, restarts, seed);
    out.exact = false;
  }
  return out;
}

double l1_distance(const StepKernel& k1, const StepKernel& k2) {
  if (k1.dim() != k2.dim())
    throw DimensionMismatch("kernels have different mark dimensions");
  GridRefinement g = refine_grids(k1.n(), k2.n());
  int m = g.size();
  int d = k1.dim();
  double total = 0;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      std::span<const double> a = k1.mark(g.idx_a[r], g.idx_a[c]);
      std::span<const double> b = k2.mark(g.idx_b[r], g.idx_b[c]);
      double s2 = 0;
      for (int k = 0; k < d; ++k) {
        double diff = a[k] - b[k];
        s2 += diff * diff;
      }
      total += g.widths[r] * g.widths[c] * std::sqrt(s2);
    }
  return total;
}

static std::vector<double> parse_number_list(const std::string& text, char sep,
                                             const std::string& what) {
  std::vector<double> out;
  for (const std::string& tok : split(text, sep)) {
    std::string t = trim(tok);
    if (t.empty()) throw BadSpec("empty number in " + what);
    size_t pos = 0;
    double v;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      throw BadSpec("bad number '" + t + "' in " + what);
    }
    if (pos != t.size()) throw BadSpec("bad number '" + t + "' in " + what);
    out.push_back(v);
  }
  return out;
}

StepKernel read_step_kernel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadSpec("cannot open kernel file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw BadSpec("empty kernel file: " + path);
  header = trim(header);
  if (header.rfind("# stepkernel", 0) != 0)
    throw BadSpec("kernel file missing '# stepkernel' header: " + path);
  int n = -1, dim = -1;
  std::vector<double> lo, hi;
  std::istringstream hs(header.substr(12));
  std::string tok;
  while (hs >> tok) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos) throw BadSpec("bad header token '" + tok + "'");
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "n") n = (int)std::stol(val);
    else if (key == "dim") dim = (int)std::stol(val);
    else if (key == "lo") lo = parse_number_list(val, ';', "header lo");
    else if (key == "hi") hi = parse_number_list(val, ';', "header hi");
    else throw BadSpec("unknown header key '" + key + "'");
  }
  if (n < 1 || dim < 1) throw BadSpec("header must set n and dim");
  if ((int)lo.size() != dim || (int)hi.size() != dim)
    throw BadSpec("header lo/hi must have dim entries");
  MarkSpace space = MarkSpace::box(lo, hi);
  std::vector<double> marks;
  marks.reserve((size_t)n * n * dim);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = split(line, ',');
    if ((int)cells.size() != n)
      throw BadSpec("row " + fmt_int(rows) + " has " + fmt_int((long long)cells.size()) +
                    " cells, expected " + fmt_int(n));
    for (const std::string& cell : cells) {
      std::vector<double> comps = parse_number_list(cell, ';', "cell");
      if ((int)comps.size() != dim)
        throw BadSpec("cell with " + fmt_int((long long)comps.size()) +
                      " components, expected " + fmt_int(dim));
      marks.insert(marks.end(), comps.begin(), comps.end());
    }
    ++rows;
  }
  if (rows != n) throw NonSquareMatrix("expected " + fmt_int(n) + " rows, got " + fmt_int(rows));
  return StepKernel(n, space, std::move(marks));
}

void write_step_kernel_csv(const StepKernel& k, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw BadSpec("cannot write kernel file: " + path);
  const MarkSpace& s = k.mark_space();
  std::vector<std::string> lo, hi;
  for (int c = 0; c < s.dim; ++c) {
    lo.push_back(fmt_g(s.lower[c]));
    hi.push_back(fmt_g(s.upper[c]));
  }
  out << "# stepkernel n=" << k.n() << " dim=" << s.dim << " lo=" << join(lo, ";")
      << " hi=" << join(hi, ";") << "\n";
  for (int i = 0; i < k.n(); ++i) {
    std::vector<std::string> cells;
    for (int j = 0; j < k.n(); ++j) {
      std::span<const double> m = k.mark(i, j);
      std::vector<std::string> comps;
      for (double x : m) comps.push_back(fmt_g(x));
      cells.push_back(join(comps, ";"));
    }
    out << join(cells, ",") << "\n";
  }
}

}  // namespace gmfc
