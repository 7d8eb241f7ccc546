#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace roughcal {

// Malformed files, inconsistent dimensions, invalid graphs.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Turbulent flow derivatives are undefined at zero head loss.
class DomainError : public std::runtime_error {
public:
    DomainError(const std::string& what, std::vector<int> pipes, int set = -1)
        : std::runtime_error(what), pipes_(std::move(pipes)), set_(set) {}
    const std::vector<int>& pipes() const { return pipes_; }
    int set() const { return set_; }

private:
    std::vector<int> pipes_;
    int set_;
};

class SingularError : public std::runtime_error {
public:
    SingularError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

class NotFactorizable : public std::runtime_error {
public:
    NotFactorizable(const std::string& what, double delta)
        : std::runtime_error(what), delta_(delta) {}
    double delta() const { return delta_; }

private:
    double delta_;
};

class SolveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace roughcal
