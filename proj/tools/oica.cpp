#include "oica/cli.hpp"

int main(int argc, char** argv) { return oica::run_cli(argc, argv); }
