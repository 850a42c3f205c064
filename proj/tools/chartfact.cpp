#include <iostream>
#include <string>
#include <vector>

#include "chartfact/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return chartfact::cli::run_cli(args, std::cout, std::cerr);
}
