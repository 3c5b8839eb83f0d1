#include <iostream>

#include "shardgame/cli.hpp"

int main(int argc, char** argv) {
  return shardgame::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
