#include "asymdec/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return asymdec::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
