#include <iostream>

#include "duriano/cli/commands.hpp"

int main(int argc, char** argv) { return duriano::cli::run(argc, argv, std::cout, std::cerr); }
