#include "votetrace/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return votetrace::run_cli(argc, argv, std::cout, std::cerr); }
