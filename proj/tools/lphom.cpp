#include "lphom/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lphom::cli_dispatch(argc, argv, std::cout, std::cerr); }
