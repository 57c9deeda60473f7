#include <iostream>
#include <string>
#include <vector>

#include "motraj/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return motraj::cli::Run(args, std::cout, std::cerr);
}
