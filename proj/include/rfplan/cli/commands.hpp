// SPDX-License-Identifier: Apache-2.0
//
// Batch command-line workflows: validate, trace, coverage, calibrate, plan, montecarlo, synth.

#ifndef RFPLAN_CLI_COMMANDS_HPP
#define RFPLAN_CLI_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace rfplan
{

enum ExitCode : int
{
    kExitOk = 0,
    kExitValidation = 2,
    kExitInfeasible = 3,
    kExitIo = 4
};

// args excludes the program name.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
int run_cli(int argc, char **argv);

std::string tool_version();

} // namespace rfplan

#endif
