#include <iostream>

#include "otree/cli.hpp"

int main(int argc, char** argv) { return otree::run_cli(argc, argv, std::cout, std::cerr); }
