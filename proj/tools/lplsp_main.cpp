#include "lplsp/cli.hpp"

int main(int argc, char** argv) { return lplsp::cli::run(argc, argv); }
