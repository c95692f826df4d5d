#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return wdro::cli::run(argc, argv, std::cout, std::cerr); }
