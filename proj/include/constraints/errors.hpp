// Error taxonomy shared by all solver modules.  Everything derives from
// SolverError so drivers can map failures onto exit codes in one place.

#pragma once

#include <stdexcept>
#include <string>

namespace constraints {

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Iteration cap hit before reaching the residual target.
struct NoConvergence : SolverError {
    explicit NoConvergence(const std::string& what) : SolverError(what) {}
};

// Right hand side not orthogonal to the kernel of a singular operator.
struct SolvabilityViolation : SolverError {
    explicit SolvabilityViolation(const std::string& what) : SolverError(what) {}
};

struct NonPositiveEta : SolverError {
    explicit NonPositiveEta(const std::string& what) : SolverError(what) {}
};

// tau == 0 or sigma == 0 where the equations exclude it.
struct DegenerateData : SolverError {
    explicit DegenerateData(const std::string& what) : SolverError(what) {}
};

// The integral condition gating the limit system fails.
struct ConditionViolated : SolverError {
    explicit ConditionViolated(const std::string& what) : SolverError(what) {}
};

struct DoubleRootDegeneracy : SolverError {
    explicit DoubleRootDegeneracy(const std::string& what) : SolverError(what) {}
};

// Conformal factor lost positivity somewhere on the grid.
struct PositivityLoss : SolverError {
    explicit PositivityLoss(const std::string& what) : SolverError(what) {}
};

struct StepUnderflow : SolverError {
    explicit StepUnderflow(const std::string& what) : SolverError(what) {}
};

// A fixed-point iterate left the admissible set although the stability
// analysis predicted invariance.  Treated as a falsification event.
struct SetEscape : SolverError {
    explicit SetEscape(const std::string& what) : SolverError(what) {}
};

struct InfeasibleStability : SolverError {
    explicit InfeasibleStability(const std::string& what) : SolverError(what) {}
};

// Bootstrap exponent sequence does not diverge (t <= t0).
struct NonEscaping : SolverError {
    explicit NonEscaping(const std::string& what) : SolverError(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace constraints
