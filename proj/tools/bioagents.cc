#include <iostream>
#include <string>
#include <vector>

#include "bioagents/app/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bioagents::app::run_cli(args, std::cout, std::cerr);
}
