#include <iostream>

#include "sldp/cli.hpp"

int main(int argc, char** argv) { return sldp::cli::run(argc, argv, std::cout, std::cerr); }
