#include <iostream>

#include "clickcode/cli.hpp"

int main(int argc, char** argv) { return clickcode::run_cli(argc, argv, std::cout, std::cerr); }
