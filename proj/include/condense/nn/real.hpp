#pragma once

// The model stack is compiled twice: single precision for training and
// inference, double precision for gradient checking. Each build lives in its
// own inline namespace so both can be linked into one binary; a translation
// unit sees whichever build its CONDENSE_REAL_F64 setting selects.

#if defined(CONDENSE_REAL_F64)
#define CONDENSE_PRECISION f64
#else
#define CONDENSE_PRECISION f32
#endif

namespace condense::inline CONDENSE_PRECISION::nn {

#if defined(CONDENSE_REAL_F64)
using Real = double;
#else
using Real = float;
#endif

}  // namespace condense::inline CONDENSE_PRECISION::nn
