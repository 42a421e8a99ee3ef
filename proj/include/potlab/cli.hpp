#ifndef POTLAB_CLI_HPP_
#define POTLAB_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace potlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitCheckFailure = 2;
inline constexpr int kExitUncovered = 3;  // also non-convergence

// args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace potlab

#endif  // POTLAB_CLI_HPP_
