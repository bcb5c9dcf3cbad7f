#include <iostream>

#include "trgan/cli.hpp"

int main(int argc, char** argv) { return trgan::cli::run(argc, argv, std::cout, std::cerr); }
