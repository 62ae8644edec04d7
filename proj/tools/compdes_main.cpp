#include <iostream>

#include "compdes/cli.hpp"

int main(int argc, char** argv) { return compdes::run_cli(argc, argv, std::cout, std::cerr); }
