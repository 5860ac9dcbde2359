#ifndef REGIME_MV_ERRORS_HPP
#define REGIME_MV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace regime_mv {

// A numerical routine could not complete: non-finite RHS, positivity breach,
// failed factorization, inner minimizer out of iterations. The message names
// the offending time node and regime where applicable.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The requested constraint mode is incompatible with the model
// (no-shorting with a regime-dependent interest rate).
class ModeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Model file could not be parsed into a MarketModel.
class ModelIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace regime_mv

#endif
