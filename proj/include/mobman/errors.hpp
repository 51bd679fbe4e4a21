#pragma once

#include <stdexcept>
#include <string>

namespace mobman {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct DegenerateRotation6D : Error { using Error::Error; };
struct EmptyCorrespondences : Error { using Error::Error; };

// world
struct InfeasibleWorld : Error { using Error::Error; };
struct ScenarioInvalid : Error { using Error::Error; };

// scene graph
struct MalformedGoalSpec : Error { using Error::Error; };
struct EmptyGoalGraph : Error { using Error::Error; };
struct NoCorrespondences : Error { using Error::Error; };

// reasoner
struct ReasonerUnavailable : Error { using Error::Error; };

// navigator
struct NoFrontiersLeft : Error { using Error::Error; };

// hand track / whole body
struct TooFewSamples : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct RateMismatch : Error { using Error::Error; };

} // namespace mobman
