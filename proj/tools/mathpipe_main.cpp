#include "mathpipe/cli.hpp"

int main(int argc, char** argv) { return mathpipe::cli::run(argc, argv); }
