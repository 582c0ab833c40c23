#pragma once

#include <iosfwd>

namespace prokd::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;    // bad arguments or config
inline constexpr int exit_runtime = 2;  // a module failed while running

// One verb per invocation:
//   generate-data | train-teacher | snapshot | distill | evaluate | ablate |
//   export-prototypes | grid-search
// with --config FILE, --out DIR, --seed N, --force and -v. Messages go to
// `out` and `err`; the return value is the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prokd::cli
