#include <iostream>

#include "nvsim/expcli.hpp"

int main(int argc, char** argv) { return nvsim::cli::main_entry(argc, argv, std::cout, std::cerr); }
