#include "noisyal/cli.h"

int main(int argc, char** argv) { return noisyal::run_cli(argc, argv); }
