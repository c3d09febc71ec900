#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace cryptorisk {

enum class ErrorKind {
    Validation,
    Scenario,
    Schema,
    Data,
    Range,
    Alignment,
    Label,
    InsufficientData,
    Estimation,
    Calibration,
    Numerical,
    Factorization,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Process exit code for a failure of this kind: 1 validation, 2 data, 3 numerical.
int exit_code_for(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string module = {})
        : std::runtime_error(message), kind_(kind), module_(std::move(module)) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Pipeline stage that raised the error; empty outside the scenario runner.
    const std::string& module() const noexcept { return module_; }

private:
    ErrorKind kind_;
    std::string module_;
};

}  // namespace cryptorisk
