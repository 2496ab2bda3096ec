#include <iostream>
#include <string>
#include <vector>

#include "treeattn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return treeattn::run_cli(args, std::cout, std::cerr);
}
