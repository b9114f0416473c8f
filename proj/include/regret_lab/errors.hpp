#pragma once

#include <stdexcept>
#include <string>

namespace regret_lab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model violates a TabularMDP invariant (kernel row, reward range, s0).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Dimensions of two objects do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Exhaustive enumeration refused because the instance is too large.
class RefusalError : public Error {
public:
    using Error::Error;
};

/// A kernel row could not be sampled from.
class SamplingError : public Error {
public:
    using Error::Error;
};

/// Rejection sampling of an instance ran out of attempts.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// A caller did not satisfy the contract of an operation.
class ContractError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace regret_lab
