#pragma once

#include <cstdint>

#include "gmfc/kernels.hpp"

// Cut norm of a weighted block matrix:
//   sup_{A,B subsets of [0,1]} | integral over AxB of the step function |.
// By linearity the sup is attained on unions of blocks, so it reduces to a
// discrete max over row/column subsets.

namespace gmfc {

inline constexpr int kCutNormExactCap = 24;

// Value of the best rectangle with the given row set: columns are chosen
// analytically (keep a column iff its restricted sum has the right sign),
// and the larger of the positive and negative choices is returned.
double cut_rect_value_for_rows(const WeightedMatrix& m, const std::vector<char>& rows);

// Exact cut norm via 2^n row-subset enumeration (Gray code, incremental
// column sums).  Throws SizeCapExceeded when n exceeds the cap.
double cut_norm_exact(const WeightedMatrix& m, int cap = kCutNormExactCap);

// Alternating-maximization lower bound from random starts (plus the
// deterministic full-set start, which makes one-signed matrices exact).
// Never exceeds cut_norm_exact: both report values through
// cut_rect_value_for_rows so identical optima give identical doubles.
double cut_norm_lower_bound(const WeightedMatrix& m, int restarts, std::uint64_t seed);

}  // namespace gmfc
