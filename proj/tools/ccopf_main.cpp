#include <iostream>

#include "ccopf/cli.hpp"

int main(int argc, char** argv) { return ccopf::cli_main(argc, argv, std::cout, std::cerr); }
