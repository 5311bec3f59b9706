#include <iostream>
#include <string>
#include <vector>

#include "fastracer/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fastracer::cli::run(std::move(args), std::cin, std::cout, std::cerr);
}
