// Command-line front end. run_cli owns argument parsing, command dispatch
// and the exit-code contract: 0 success, 1 configuration/integrity/lookup
// problems, 2 data problems, 3 numerical aborts.
#pragma once

namespace dgcf {

int run_cli(int argc, const char* const* argv);

} // namespace dgcf
