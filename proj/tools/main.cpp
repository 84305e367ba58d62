#include <iostream>

#include "poksvd/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return poksvd::cli::run(args, std::cout, std::cerr);
}
