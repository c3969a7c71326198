#include <iostream>

#include "tomdistill/cli.hpp"

int main(int argc, char** argv) {
  return tomdistill::run_cli(argc, argv, std::cout, std::cerr);
}
