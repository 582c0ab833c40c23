#include <iostream>

#include "prokd/cli/cli.hpp"

int main(int argc, char** argv) { return prokd::cli::run(argc, argv, std::cout, std::cerr); }
