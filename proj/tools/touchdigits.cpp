#include "touchdigits/cli/cli.hpp"

int main(int argc, char** argv) { return touchdigits::cli::run(argc, argv); }
