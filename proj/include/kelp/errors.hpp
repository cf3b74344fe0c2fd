#pragma once

#include <stdexcept>
#include <string>

namespace kelp {

// Transport or backend failure of an embedding/LLM provider. Callers may retry.
class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input file could not be read or parsed at all.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Optimization produced a non-finite loss or weight.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kelp
