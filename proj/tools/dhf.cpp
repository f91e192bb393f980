#include "dhf/cli.hpp"

int main(int argc, char** argv) { return dhf::cli::run(argc, argv); }
