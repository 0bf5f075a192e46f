#include "greedysel/cli.hpp"

int main(int argc, char** argv) { return greedysel::cli::run_cli(argc, argv); }
