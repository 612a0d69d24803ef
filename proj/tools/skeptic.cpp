#include <iostream>

#include "skeptic/commands.hpp"

int main(int argc, char** argv) { return skeptic::run_cli(argc, argv, std::cout, std::cerr); }
