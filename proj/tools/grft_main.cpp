#include <iostream>
#include <string>
#include <vector>

#include "grft/app/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return grft::run_cli(args, std::cout, std::cerr);
}
