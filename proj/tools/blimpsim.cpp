#include "blimpsim/cli.hpp"

int main(int argc, char** argv) { return blimpsim::cli_main(argc, argv); }
