#ifndef CITYEXPO_APP_CLI_H_
#define CITYEXPO_APP_CLI_H_

#include <iosfwd>

namespace cityexpo::app {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kModelError = 3 };

// Parses argv and runs one subcommand: generate, train, predict, evaluate,
// estimate or serve. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cityexpo::app

#endif  // CITYEXPO_APP_CLI_H_
