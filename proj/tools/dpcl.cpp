#include <iostream>

#include "dpcl/cli.hpp"

int main(int argc, char** argv) { return dpcl::cli_main(argc, argv, std::cin, std::cout, std::cerr); }
