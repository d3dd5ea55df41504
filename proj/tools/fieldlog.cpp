#include <iostream>

#include "fieldlog/cli/cli.h"

int main(int argc, char** argv) { return fieldlog::cli::run(argc, argv, std::cout, std::cerr); }
