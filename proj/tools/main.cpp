#include "gridmomentum/cli.hpp"

int main(int argc, char** argv) { return gridmomentum::run_cli(argc, argv); }
