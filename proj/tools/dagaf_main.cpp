#include "dagaf/cli.hpp"

int main(int argc, char** argv) { return dagaf::runCli(argc, argv); }
