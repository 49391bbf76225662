#include <iostream>

#include "birkhoff/cli/app.hpp"

int main(int argc, char** argv) { return birkhoff::cli::run_cli(argc, argv, std::cout, std::cerr); }
