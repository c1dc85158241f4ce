#include "gisurv/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return gisurv::cli::main(argc, argv, std::cout, std::cerr); }
