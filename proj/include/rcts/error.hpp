#pragma once

#include <stdexcept>
#include <string>

namespace rcts {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent knowledge-base data.
class KbError : public Error {
public:
    using Error::Error;
};

class RetrievalError : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    GenerationError(const std::string& what, bool retryable = false)
        : Error(what), retryable_(retryable) {}

    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

class SearchError : public Error {
public:
    using Error::Error;
};

}  // namespace rcts
