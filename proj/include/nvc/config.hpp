#pragma once

// Precision-dependent code lives in an inline namespace named after the scalar
// type so that a 32-bit and a 64-bit build of the model library can be linked
// into the same binary (the gradient checks run in 64-bit).
#if defined(NVC_DOUBLE_PRECISION)
#define NVC_ABI f64
#else
#define NVC_ABI f32
#endif

#define NVC_BEGIN_NAMESPACE \
  namespace nvc {           \
  inline namespace NVC_ABI {
#define NVC_END_NAMESPACE \
  }                       \
  }

NVC_BEGIN_NAMESPACE
#if defined(NVC_DOUBLE_PRECISION)
using Scalar = double;
#else
using Scalar = float;
#endif
NVC_END_NAMESPACE
