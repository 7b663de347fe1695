#pragma once

#include <stdexcept>
#include <string>

namespace rtandem {

// Thrown by the breakpoint solver when the two contamination classes share a
// member, i.e. no clipped-ratio pair with c_lo < c_hi exists.
struct NotDisjointError : std::runtime_error {
    explicit NotDisjointError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a myopic rule update would need a threshold of 0 or infinity
// because the predecessor's error probabilities collapsed to 0 or 1.
struct DegeneratePosteriorError : std::runtime_error {
    explicit DegeneratePosteriorError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the fixed-point evaluator for relay rules that never override the
// incoming decision on one side (the recursion has no contraction there).
struct NoContractionError : std::runtime_error {
    explicit NoContractionError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when the vanishing-error relay scheme is requested for a model that
// cannot support it (contaminated H0 class or bounded log-likelihood ratio).
struct SchemeInapplicableError : std::runtime_error {
    explicit SchemeInapplicableError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rtandem
