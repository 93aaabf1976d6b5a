#ifndef ERGOGAME_TOOLS_CLI_HPP_
#define ERGOGAME_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace ergogame::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kNotConverged = 2,
  kCertificateFailed = 3,
  kSimulationRefused = 4,
};

// Runs one invocation; args excludes the program name. Results go to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ergogame::cli

#endif  // ERGOGAME_TOOLS_CLI_HPP_
