#include "cli.hpp"

int main(int argc, char** argv) { return dgcf::run_cli(argc, argv); }
