#include "pmod/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pmod::cli::main(argc, argv, std::cout, std::cerr); }
