#include "spheregc/cli.hpp"

int main(int argc, char** argv) { return spheregc::run_cli(argc, argv); }
