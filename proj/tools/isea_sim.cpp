#include <iostream>

#include "isea/cli.hpp"

int main(int argc, char** argv) { return isea::run_cli(argc, argv, std::cout, std::cerr); }
