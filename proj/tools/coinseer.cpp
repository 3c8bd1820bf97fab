#include <coinseer/cli.hpp>

int main(int argc, char** argv) { return coinseer::cli::run(argc, argv); }
