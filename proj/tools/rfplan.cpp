// SPDX-License-Identifier: Apache-2.0

#include "rfplan/cli/commands.hpp"

int main(int argc, char **argv)
{
    return rfplan::run_cli(argc, argv);
}
