#include "lio/cli.hpp"

int main(int argc, char** argv) { return lio::run_cli(argc, argv); }
