#include "cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gradflow::cli::dispatch(argc, argv, std::cout, std::cerr); }
