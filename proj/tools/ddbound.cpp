// Command-line entry point

#include "ddbound/cli.hpp"

int main(int argc, char** argv) { return ddbound::cli::run(argc, argv); }
