#pragma once
// Error taxonomy: config_error for malformed input (CLI exit code 2),
// domain_error for mathematically invalid requests (CLI exit code 3).

#include <stdexcept>
#include <string>

namespace agestruct {

struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace agestruct
