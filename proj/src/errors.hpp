#pragma once

#include <stdexcept>
#include <string>

namespace phenoflow {

enum class Errc {
    invalid_config,
    io_error,
    malformed_row,
    out_of_range,
    duplicate_sample,
    empty_window,
    too_few_points,
    no_convergence,
    degenerate_fit,
    constant_predictor,
    constant_series,
    length_mismatch,
    zero_slope,
    missing_week,
    missing_soil,
    too_few_samples_in_year,
    non_finite_loss,
    invalid_coalition_size,
    degenerate_system,
    additivity_violation,
};

/// Single exception type carrying a machine-checkable code plus a
/// human-readable message. Thrown by every module; the C API boundary maps
/// codes onto status values.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace phenoflow
