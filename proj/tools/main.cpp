#include "eparvi/cli.hpp"

#include <iostream>

int main(int argc, char **argv) {
  return eparvi::run_cli(argc, argv, std::cout, std::cerr);
}
