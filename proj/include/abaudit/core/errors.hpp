#pragma once

#include <stdexcept>
#include <string>

namespace abaudit {

// Base of every error the library throws. Verification outcomes that are
// findings rather than failures (bad signature, broken chain) are returned
// as values instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };
class DecodeError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };
class NotFoundError : public Error { public: using Error::Error; };
// Caller could not be identified: unknown participant, bad request signature
// or a replayed nonce.
class AuthenticationError : public Error { public: using Error::Error; };
class AuthorizationError : public Error { public: using Error::Error; };
class ConflictError : public Error { public: using Error::Error; };
class StateError : public Error { public: using Error::Error; };

// A revealed (value, randomness) pair does not reproduce its commitment.
class InvalidOpening : public Error { public: using Error::Error; };

}  // namespace abaudit
