#include "trimode/cli.hpp"

int main(int argc, char** argv) { return trimode::cli::run(argc, argv); }
