#include "selectest/cli.hpp"

int main(int argc, char** argv) { return selectest::run_cli(argc, argv); }
