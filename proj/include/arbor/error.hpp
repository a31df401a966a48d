#pragma once

#include <stdexcept>
#include <string>

namespace arbor {

/// Base of every exception thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// core_trees
struct invalid_word : error { using error::error; };
struct k_too_large : error { using error::error; };
struct invalid_statistics : error { using error::error; };
struct invalid_mark : error { using error::error; };

// enumeration
struct too_large : error { using error::error; };
struct usage_exceeded : error { using error::error; };

// samplers
struct attempts_exhausted : error { using error::error; };
struct invalid_distribution : error { using error::error; };

// bounds
struct path_degenerate : error { using error::error; };
struct has_ones : error { using error::error; };
struct out_of_range : error { using error::error; };

// simply_generated
struct diverged : error { using error::error; };
struct out_of_domain : error { using error::error; };
struct rho_unknown : error { using error::error; };
struct phi_diverges : error { using error::error; };
struct zero_partition : error { using error::error; };
struct bad_parameters : error { using error::error; };

} // namespace arbor
