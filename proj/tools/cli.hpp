#pragma once

#include <istream>
#include <ostream>

namespace kgrag::cli {

// Exit status: 0 success, 1 configuration or runtime failure (stage-labeled on
// `err`), 2 usage error.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace kgrag::cli
