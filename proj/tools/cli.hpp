#pragma once

namespace statenet::cli {

// Parses argv and runs one verb. Returns the process exit code:
// 0 success, 1 domain error (decode/shape/NaN/...), 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace statenet::cli
