#include <iostream>

#include "finsler/cli.hpp"

int main(int argc, char** argv) { return finsler::run_cli(argc, argv, std::cout, std::cerr); }
