#include "tfscat/cli.hpp"

int main(int argc, char** argv) { return tfs::cli_main(argc, argv); }
