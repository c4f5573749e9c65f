#include "rsub/cli.hpp"

int main(int argc, char** argv) { return rsub::cli_main(argc, argv); }
