#pragma once

#include <stdexcept>
#include <string>

// Error types thrown by the library.  Each one is a thin wrapper around
// std::runtime_error so call sites can catch either the specific type or
// the base.

namespace gmfc {

#define GMFC_ERROR_TYPE(Name) \
  struct Name : std::runtime_error { \
    explicit Name(const std::string& msg) : std::runtime_error(msg) {} \
  }

GMFC_ERROR_TYPE(NonSquareMatrix);      // block matrix is not n x n
GMFC_ERROR_TYPE(MarkOutOfBounds);      // mark value outside its declared box
GMFC_ERROR_TYPE(DomainViolation);      // argument outside [0,1] or an action box
GMFC_ERROR_TYPE(SizeCapExceeded);      // exact algorithm asked for more than its cap
GMFC_ERROR_TYPE(DimensionMismatch);    // incompatible dimensions between objects
GMFC_ERROR_TYPE(WeightsNotNormalized); // chattering weights do not sum to one
GMFC_ERROR_TYPE(GridMismatch);         // grid sizes do not nest as required
GMFC_ERROR_TYPE(LengthMismatch);       // paired samples of different length
GMFC_ERROR_TYPE(SizeMismatch);         // ensembles/bundles of different size
GMFC_ERROR_TYPE(NonFiniteState);       // NaN or inf appeared during integration
GMFC_ERROR_TYPE(IndexOutOfRange);      // agent or block index out of range
GMFC_ERROR_TYPE(BadSpec);              // malformed model/config specification
GMFC_ERROR_TYPE(BudgetTooSmall);       // optimizer budget cannot cover one round
GMFC_ERROR_TYPE(NoSnapshot);           // trajectory has no snapshot near the time
GMFC_ERROR_TYPE(ConcavityNotDeclared); // projection requested without concavity flag

#undef GMFC_ERROR_TYPE

}  // namespace gmfc
