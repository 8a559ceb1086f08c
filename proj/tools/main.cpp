#include "cli.hpp"

int main(int argc, char** argv) { return statenet::cli::run(argc, argv); }
