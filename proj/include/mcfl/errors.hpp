#ifndef MCFL_ERRORS_HPP
#define MCFL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mcfl {

/// Bad arguments or an invalid configuration. CLI maps this to exit code 2.
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A requested profile enumeration exceeds the configured cap. Exit code 4.
struct enumeration_cap_error : std::runtime_error {
    enumeration_cap_error(const std::string& msg, long long product)
        : std::runtime_error(msg), product(product) {}
    long long product;
};

/// A gradient-descent run produced a non-finite iterate. Exit code 3.
struct divergence_error : std::runtime_error {
    divergence_error(const std::string& msg, int epoch)
        : std::runtime_error(msg), epoch(epoch) {}
    int epoch;
};

} // namespace mcfl

#endif
