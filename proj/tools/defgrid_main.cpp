#include "defgrid/workbench/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return defgrid::workbench::run_cli(argc, argv, std::cout, std::cerr);
}
