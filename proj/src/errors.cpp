#include "cryptorisk/errors.hpp"

namespace cryptorisk {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Scenario: return "scenario";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Data: return "data";
    case ErrorKind::Range: return "range";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Label: return "label";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::Estimation: return "estimation";
    case ErrorKind::Calibration: return "calibration";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Factorization: return "factorization";
    }
    return "unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Scenario:
        return 1;
    case ErrorKind::Numerical:
    case ErrorKind::Factorization:
        return 3;
    default:
        return 2;
    }
}

}  // namespace cryptorisk
