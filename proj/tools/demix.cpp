#include <iostream>

#include "demix/cli.hpp"

int main(int argc, char** argv) { return demix::cli_main(argc, argv, std::cout, std::cerr); }
