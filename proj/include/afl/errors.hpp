#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor or vector shapes that do not line up.
struct DimensionError : Error {
    using Error::Error;
};

// ParamVectors bound to different ModelSpecs combined in one operation.
struct BindingError : Error {
    using Error::Error;
};

// Non-finite value produced inside a model; `layer` is the first offending
// layer index, or -1 when the failure is not attributable to a layer.
struct NumericError : Error {
    NumericError(const std::string& what, int layer)
        : Error(what), layer(layer) {}
    int layer;
};

struct TrainingDivergenceError : NumericError {
    TrainingDivergenceError(const std::string& what, std::size_t client, int layer)
        : NumericError(what, layer), client(client) {}
    std::size_t client;
};

struct SynthesisDivergenceError : NumericError {
    using NumericError::NumericError;
};

struct ConfigError : Error {
    using Error::Error;
};

struct SchedulingError : Error {
    using Error::Error;
};

// Raised when the event queue has nothing left to deliver.
struct SimulationExhausted : Error {
    using Error::Error;
};

struct LookupError : Error {
    using Error::Error;
};

struct ConsistencyError : Error {
    using Error::Error;
};

struct PreconditionError : Error {
    using Error::Error;
};

struct SamplingExhausted : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace afl
