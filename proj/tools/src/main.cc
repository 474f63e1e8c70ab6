#include <iostream>

#include "cityexpo/app/cli.h"

int main(int argc, char** argv) {
  return cityexpo::app::run_cli(argc, argv, std::cout, std::cerr);
}
