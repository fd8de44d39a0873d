// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "commands.h"

int main(int argc, char **argv) {
  return lrptext::cli::RunCli(argc, argv, std::cout, std::cerr);
}
