#include "spiked_cli.hpp"

int main(int argc, char** argv) { return spiked::cli::run(argc, argv); }
