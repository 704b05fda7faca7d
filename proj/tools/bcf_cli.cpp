#include "bcf/experiments/cli.hpp"

int main(int argc, char **argv) { return bcf::experiments::run_cli(argc, argv); }
