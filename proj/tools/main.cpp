#include "cli.hpp"

int main(int argc, char** argv) { return qwsearch::cli::execute(argc, argv); }
