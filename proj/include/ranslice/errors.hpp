#pragma once

#include <stdexcept>
#include <string>

namespace ranslice {

// Base for every error the library raises. Subclasses map onto the CLI's
// exit codes: validation-type errors exit 1, everything else exits 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class IncompleteDatasetError : public Error {
public:
    IncompleteDatasetError(double state_mbps, double weight_pct);

    double state_mbps() const { return state_mbps_; }
    double weight_pct() const { return weight_pct_; }

private:
    double state_mbps_;
    double weight_pct_;
};

class ModeError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class PolicyError : public Error {
public:
    using Error::Error;
};

class StoreError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace ranslice
