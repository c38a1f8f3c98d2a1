#include "eprbus/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return eprbus::cli::run_cli(argc, argv, std::cout, std::cerr); }
