#include <iostream>

#include "spatialecon/cli.hpp"

int main(int argc, char** argv) { return spatialecon::cli_run(argc, argv, std::cout, std::cerr); }
