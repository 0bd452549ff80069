#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace alpnet {

/// Malformed input: wrong dimension, non-finite entry, invalid field.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its stated precondition.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An iteration ran out of budget. Carries the last iterate so callers can
/// inspect how far it got.
class BudgetError : public std::runtime_error {
public:
    BudgetError(const std::string& what, Eigen::VectorXd last)
        : std::runtime_error(what), last_(std::move(last)) {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_; }

private:
    Eigen::VectorXd last_;
};

/// Effective signal gain |u^H H t| vanished for some link.
class DegenerateBeamError : public std::runtime_error {
public:
    DegenerateBeamError(const std::string& what, int user)
        : std::runtime_error(what), user_(user) {}
    int user() const noexcept { return user_; }

private:
    int user_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace alpnet
