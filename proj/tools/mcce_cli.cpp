#include <iostream>

#include "mcce/cli.hpp"

int main(int argc, char** argv) { return mcce::cli::run(argc, argv, std::cout, std::cerr); }
