#include "potlab/cli.hpp"

int main(int argc, char** argv) { return potlab::cli_main(argc, argv); }
