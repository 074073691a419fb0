#include <iostream>

#include "protvec/cli.hpp"

int main(int argc, char** argv) { return protvec::cli_dispatch(argc, argv, std::cout, std::cerr); }
