#include <iostream>

#include "semlink/cli.hpp"

int main(int argc, char** argv) {
  return semlink::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
