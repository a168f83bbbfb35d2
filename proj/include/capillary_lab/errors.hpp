#pragma once

#include <stdexcept>
#include <string>

namespace capillary_lab {

/// Base class for every failure raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error { using Error::Error; };
class ContractViolation : public Error { using Error::Error; };
class EvaluationError : public Error { using Error::Error; };

class DegenerateImmersion : public Error { using Error::Error; };
class FocalCrossing : public Error { using Error::Error; };

class GeometryError : public Error { using Error::Error; };
class HypothesisError : public Error { using Error::Error; };
class EdgeCollision : public Error { using Error::Error; };
class InfeasibleGeometry : public Error { using Error::Error; };
class IncompleteInput : public Error { using Error::Error; };
class DegenerateVariation : public Error { using Error::Error; };
class DegenerateWedge : public Error { using Error::Error; };

// Raised when an operation needs constant mean curvature or constant
// contact angles and the input does not have them.
class Refused : public Error { using Error::Error; };

class DegeneracyError : public Error { using Error::Error; };
class DimensionMismatch : public Error { using Error::Error; };
class NonConvex : public Error { using Error::Error; };

class ParseError : public Error { using Error::Error; };

}  // namespace capillary_lab
