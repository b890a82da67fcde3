#include "popshift/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return popshift::cli::run(argc, argv, std::cout, std::cerr);
}
