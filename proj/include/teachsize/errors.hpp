#pragma once

#include <stdexcept>
#include <string>

namespace teachsize {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
    TransportError(const std::string& what, int attempts_made)
        : std::runtime_error(what), attempts(attempts_made) {}
    int attempts = 0;
};

} // namespace teachsize
