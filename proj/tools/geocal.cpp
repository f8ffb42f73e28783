#include "geocal/cli.hpp"

int main(int argc, char** argv) { return geocal::run_cli(argc, argv); }
