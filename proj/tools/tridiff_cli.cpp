#include "tridiff/cli.hpp"

int main(int argc, char** argv) { return tridiff::cli::run(argc, argv); }
