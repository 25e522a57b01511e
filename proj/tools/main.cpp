#include "jcdpt/cli.hpp"

int main(int argc, char** argv) { return jcdpt::cli::run(argc, argv); }
