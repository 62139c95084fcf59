#include "qillum/cli.hpp"

int main(int argc, char** argv) { return qillum::cli::cli_main(argc, argv); }
