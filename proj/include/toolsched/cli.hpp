#ifndef TOOLSCHED_CLI_HPP_
#define TOOLSCHED_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace toolsched {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Entry point of the `toolsched` binary; subcommands scenario, train, eval,
// compare, replay and plot.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toolsched

#endif  // TOOLSCHED_CLI_HPP_
