#include "slatejudge/cli.h"

int main(int argc, char** argv) { return slatejudge::cli::main(argc, argv); }
