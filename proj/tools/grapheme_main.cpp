#include "grapheme/cli.hpp"

int main(int argc, char** argv) { return grapheme::run_cli(argc, argv); }
