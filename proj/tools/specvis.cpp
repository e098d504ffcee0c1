#include "specvis/cli/commands.hpp"

int main(int argc, char** argv) { return specvis::cli::run_cli(argc, argv); }
