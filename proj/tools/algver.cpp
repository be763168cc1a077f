#include <iostream>

#include "algver/cli.hpp"

int main(int argc, char** argv) { return algver::cli::run_cli(argc, argv, std::cout, std::cerr); }
