#include <painleve/cli.hpp>

int main(int argc, char** argv) { return painleve::cli::run_cli(argc, argv); }
