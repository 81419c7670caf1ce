#include <iostream>
#include <string>
#include <vector>

#include "ocsi/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ocsi::cli::run(args, std::cout, std::cerr);
}
