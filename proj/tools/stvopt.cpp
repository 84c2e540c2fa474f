#include "stvopt/cli_io.hpp"

#include <iostream>

int main(int argc, char** argv) { return stvopt::dispatch(argc, argv, std::cout, std::cerr); }
