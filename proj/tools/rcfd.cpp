#include "rcfd/cli.hpp"

int main(int argc, char** argv) { return rcfd::cli::dispatch(argc, argv); }
