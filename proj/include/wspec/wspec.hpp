#pragma once

// Umbrella header for the wspec library: asymptotic eigenvalue densities of
// Wishart matrices built from independently-but-not-identically distributed
// (or Kronecker-correlated) rectangular random matrices, computed by three
// cross-validating routes — deterministic saddle-point solvers, message
// passing on sampled matrices, and exact dense eigensolving — plus the
// closed-form MP law and moment identities.

#include "wspec/baseline.hpp"
#include "wspec/bp.hpp"
#include "wspec/compare.hpp"
#include "wspec/core.hpp"
#include "wspec/curve.hpp"
#include "wspec/ensemble.hpp"
#include "wspec/io.hpp"
#include "wspec/laws.hpp"
#include "wspec/linalg.hpp"
#include "wspec/parallel.hpp"
#include "wspec/quadrature.hpp"
#include "wspec/replica.hpp"
#include "wspec/rng.hpp"
#include "wspec/version.hpp"
