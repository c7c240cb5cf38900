#include <iostream>

#include "wordfuse/cli.hpp"

int main(int argc, char** argv) {
  return wordfuse::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
