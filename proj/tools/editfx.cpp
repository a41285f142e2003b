#include <iostream>
#include <string>
#include <vector>

#include "editfx/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return editfx::run_cli(args, std::cout, std::cerr);
}
