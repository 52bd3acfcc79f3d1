#include <iostream>
#include <string>
#include <vector>

#include "exist/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return exist::run(args, std::cout, std::cerr);
}
