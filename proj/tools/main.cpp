#include "sgame/cli.hpp"

int main(int argc, char** argv) { return sgame::run_cli(argc, argv); }
