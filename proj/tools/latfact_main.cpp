#include "latfact/cli.hpp"

int main(int argc, char** argv) { return latfact::cli::main(argc, argv); }
