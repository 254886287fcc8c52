#include "polyscale/cli.hpp"

int main(int argc, char** argv) { return polyscale::cli::run(argc, argv); }
