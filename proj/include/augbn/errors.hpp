#pragma once

#include <stdexcept>
#include <string>

namespace augbn {

// Exit-code mapping used by the CLI:
//   ConfigError   -> 2  (bad flags, invalid hyperparameters, unknown names)
//   DataError     -> 3  (unreadable/corrupt data or weight files)
//   InternalError -> 4  (violated runtime invariant)
// Argument/shape misuse of the in-process API throws std::invalid_argument,
// which the CLI also maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace augbn
