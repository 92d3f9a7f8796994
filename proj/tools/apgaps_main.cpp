#include "apgaps/cli.hpp"

int main(int argc, char** argv) { return apgaps::cli::run(argc, argv); }
