#include <iostream>

#include "schropt/cli.hpp"

int main(int argc, char** argv) { return schropt::cli_main(argc, argv, std::cout, std::cerr); }
