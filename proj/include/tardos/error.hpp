#ifndef TARDOS_ERROR_HPP
#define TARDOS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace tardos {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// No tuning constants satisfy the selected soundness/completeness pair.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Coalition or user bookkeeping violated (empty coalition, unknown user).
class CoalitionError : public Error {
public:
    using Error::Error;
};

/// Collected validation failures for an experiment or CLI configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out = "invalid configuration:";
        for (const auto& p : problems) {
            out += "\n  - ";
            out += p;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

} // namespace tardos

#endif // TARDOS_ERROR_HPP
