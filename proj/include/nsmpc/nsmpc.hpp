#ifndef NSMPC_NSMPC_HPP
#define NSMPC_NSMPC_HPP

#include "nsmpc/complementarity.hpp"
#include "nsmpc/continuation.hpp"
#include "nsmpc/errors.hpp"
#include "nsmpc/jacobian.hpp"
#include "nsmpc/kkt_residual.hpp"
#include "nsmpc/linsolve.hpp"
#include "nsmpc/newton.hpp"
#include "nsmpc/problem.hpp"
#include "nsmpc/prox.hpp"

#endif  // NSMPC_NSMPC_HPP
