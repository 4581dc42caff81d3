#include "gmfc/cut_norm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "gmfc/rng.hpp"

namespace gmfc {

double cut_rect_value_for_rows(const WeightedMatrix& m, const std::vector<char>& rows) {
  int n = m.n;
  double pos = 0.0, neg = 0.0;
  for (int j = 0; j < n; ++j) {
    double cs = 0.0;
    for (int i = 0; i < n; ++i)
      if (rows[i]) cs += m.row_w[i] * m.at(i, j);
    cs *= m.col_w[j];
    if (cs > 0) pos += cs;
    else neg -= cs;
  }
  return pos > neg ? pos : neg;
}

static std::vector<char> mask_to_rows(std::uint32_t mask, int n) {
  std::vector<char> rows(n, 0);
  for (int i = 0; i < n; ++i) rows[i] = (mask >> i) & 1u;
  return rows;
}

double cut_norm_exact(const WeightedMatrix& m, int cap) {
  m.validate();
  int n = m.n;
  if (n > cap)
    throw SizeCapExceeded("exact cut norm limited to n <= " + std::to_string(cap) +
                          ", got n = " + std::to_string(n));

  // pre-scaled rows: contribution of row i to column sum j
  std::vector<double> w((size_t)n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w[(size_t)i * n + j] = m.row_w[i] * m.at(i, j);

  // Gray-code walk over row subsets with incremental column sums.  The
  // incremental values steer the search; every near-optimal subset is kept
  // and re-evaluated freshly at the end so the returned double comes from
  // the same summation order the heuristic uses.
  std::vector<double> cs(n, 0.0);
  double best = 0.0;  // empty set
  const size_t kCandCap = 8192;
  std::vector<std::uint32_t> cand{0u};
  std::vector<double> cand_val{0.0};
  double scale = 0.0;
  for (double x : w) scale = std::max(scale, std::fabs(x));
  double eps = 1e-9 * std::max(1.0, scale);

  std::uint32_t mask = 0;
  std::uint64_t total = 1ull << n;
  for (std::uint64_t g = 1; g < total; ++g) {
    int bit = std::countr_zero(g);
    mask ^= (1u << bit);
    const double* rowp = &w[(size_t)bit * n];
    if (mask & (1u << bit))
      for (int j = 0; j < n; ++j) cs[j] += rowp[j];
    else
      for (int j = 0; j < n; ++j) cs[j] -= rowp[j];
    double pos = 0.0, neg = 0.0;
    for (int j = 0; j < n; ++j) {
      double v = cs[j] * m.col_w[j];
      if (v > 0) pos += v;
      else neg -= v;
    }
    double val = pos > neg ? pos : neg;
    if (val > best + eps) {
      best = val;
      cand.clear();
      cand_val.clear();
      cand.push_back(mask);
      cand_val.push_back(val);
    } else if (val > best - eps) {
      if (val > best) best = val;
      if (cand.size() < kCandCap) {
        cand.push_back(mask);
        cand_val.push_back(val);
      } else {
        size_t lo = 0;
        for (size_t c = 1; c < cand.size(); ++c)
          if (cand_val[c] < cand_val[lo]) lo = c;
        if (val > cand_val[lo]) {
          cand[lo] = mask;
          cand_val[lo] = val;
        }
      }
    }
  }

  double out = 0.0;
  for (std::uint32_t cm : cand)
    out = std::max(out, cut_rect_value_for_rows(m, mask_to_rows(cm, n)));
  return out;
}

// one alternating-maximization pass for a fixed sign (+1 maximizes the
// integral, -1 maximizes its negative); returns the converged row set
static std::vector<char> alternate(const WeightedMatrix& m, std::vector<char> rows,
                                   int sign, int max_iters) {
  int n = m.n;
  std::vector<char> cols(n, 0);
  for (int it = 0; it < max_iters; ++it) {
    // best columns given rows
    bool changed = false;
    for (int j = 0; j < n; ++j) {
      double cs = 0.0;
      for (int i = 0; i < n; ++i)
        if (rows[i]) cs += m.row_w[i] * m.at(i, j);
      char want = sign > 0 ? (cs > 0) : (cs < 0);
      if (want != cols[j]) {
        cols[j] = want;
        changed = true;
      }
    }
    // best rows given columns
    for (int i = 0; i < n; ++i) {
      double rs = 0.0;
      for (int j = 0; j < n; ++j)
        if (cols[j]) rs += m.col_w[j] * m.at(i, j);
      char want = sign > 0 ? (rs > 0) : (rs < 0);
      if (want != rows[i]) {
        rows[i] = want;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return rows;
}

double cut_norm_lower_bound(const WeightedMatrix& m, int restarts, std::uint64_t seed) {
  m.validate();
  if (restarts < 1) throw BadSpec("restarts must be >= 1");
  int n = m.n;
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    std::vector<char> start(n, 1);
    if (r > 0) {  // restart 0 is the deterministic full set
      CounterRng rng = keyed_rng(seed, kStreamScenario, (std::uint64_t)r);
      for (int i = 0; i < n; ++i) start[i] = (char)(rng.next_u64() & 1u);
    }
    for (int sign : {+1, -1}) {
      std::vector<char> rows = alternate(m, start, sign, 200);
      best = std::max(best, cut_rect_value_for_rows(m, rows));
    }
  }
  return best;
}

}  // namespace gmfc
