#include "ldhit/cli.hpp"

int main(int argc, char** argv) { return ldhit::run_cli(argc, argv); }
