#include <iostream>
#include <string>
#include <vector>

#include "foglane/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return foglane::cli::main(args, std::cout, std::cerr);
}
