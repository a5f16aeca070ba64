#ifndef TOPOLAT_CLI_HPP
#define TOPOLAT_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace topolat {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs a CLI invocation. Records go to `out`, diagnostics to `err`.
// Returns 0 on success, 1 on domain errors, 2 on usage errors.
// A manifest sidecar (JSON) is written unless manifest_path is empty.
int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err);

}  // namespace topolat

#endif
