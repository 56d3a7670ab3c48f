#include <iostream>
#include <string>
#include <vector>

#include "collact/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return collact::run_command(args, std::cout, std::cerr);
}
