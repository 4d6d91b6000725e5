#include <iostream>

#include "gpopt/cli.hpp"

int main(int argc, char** argv) { return gpopt::run_cli(argc, argv, std::cout, std::cerr); }
