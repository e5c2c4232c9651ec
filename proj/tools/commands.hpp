#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dme::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/**
 * Runs one `dme` invocation. `args` excludes the program name. Results go to
 * `out` (or the --out file), diagnostics and warnings to `err`.
 * Returns 0 on success, 1 on a validation error, 2 on an I/O error.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dme::cli
