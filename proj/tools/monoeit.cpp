#include "monoeit/cli.hpp"

int main(int argc, char** argv) { return monoeit::run_cli(argc, argv); }
