#include "conducta/cli.hpp"

int main(int argc, char** argv) { return conducta::cli::dispatch(argc, argv); }
