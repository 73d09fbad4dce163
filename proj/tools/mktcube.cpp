#include "mktcube/commands.hpp"

int main(int argc, char** argv) { return mktcube::harness::run_cli(argc, argv); }
