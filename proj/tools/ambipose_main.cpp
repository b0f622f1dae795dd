#include <iostream>

#include "ambipose/cli.hpp"

int main(int argc, char** argv) { return ambipose::cli::run_cli(argc, argv, std::cout, std::cerr); }
