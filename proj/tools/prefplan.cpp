#include <iostream>

#include "prefplan/cli.hpp"

int main(int argc, char** argv) { return prefplan::run_cli(argc, argv, std::cout, std::cerr); }
