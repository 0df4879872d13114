#include "diva/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return diva::cli::run(argc, argv, std::cout, std::cerr); }
