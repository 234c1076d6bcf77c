#include "cli.hpp"

int main(int argc, char** argv) { return gsmdg::cli::run(argc, argv); }
