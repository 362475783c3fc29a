#include "twoaxis/cli.hpp"

int main(int argc, char** argv) { return twoaxis::cli_main(argc, argv); }
