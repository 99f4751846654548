#include "fairclust/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fairclust::main_entry(argc, argv, std::cout, std::cerr); }
