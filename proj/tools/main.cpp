#include "cli.hpp"

int main(int argc, char** argv) { return ipi::cli::cli_main(argc, argv); }
