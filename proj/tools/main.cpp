#include <iostream>

#include "vmap/cli/cli.hpp"

int main(int argc, char** argv) {
  return vmap::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
