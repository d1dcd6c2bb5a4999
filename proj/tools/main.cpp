#include "aigckit/cli.hpp"

int main(int argc, char** argv) { return aigckit::cli::run(argc, argv); }
