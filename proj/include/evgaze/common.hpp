#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evgaze {

// Error categories map 1:1 onto the CLI exit-code contract
// (1 config, 2 I/O, 3 shape, 4 alignment).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct alignment_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Worker-pool width: EVGAZE_THREADS caps the OpenMP team when set.
// Returns the effective thread count.
int configure_threads();

} // namespace evgaze
