#include "surge/cli.hpp"

int main(int argc, char** argv) { return surge::cli::run(argc, argv); }
