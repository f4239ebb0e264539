#include <iostream>

#include "warmmem/cli.hpp"

int main(int argc, char** argv) { return warmmem::run_cli(argc, argv, std::cout, std::cerr); }
