#include "tclean/cli.hpp"

int main(int argc, char** argv) { return tclean::cli::run(argc, argv); }
