#include "tradenet/cli.hpp"

int main(int argc, char** argv) { return tradenet::cli::run(argc, argv); }
