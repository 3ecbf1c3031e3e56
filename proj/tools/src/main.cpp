#include <iostream>

#include "lsa_cli/cli.hpp"

int main(int argc, char** argv) {
  return lsa::cli::dispatch(argc, argv, std::cout, std::cerr);
}
