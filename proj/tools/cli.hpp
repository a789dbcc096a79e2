#pragma once

#include <ostream>

namespace floatnorm::cli {

/// Entry point behind the `floatnorm` binary. Returns the process exit code:
/// 0 on success, 1 for domain errors, 2 for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace floatnorm::cli
