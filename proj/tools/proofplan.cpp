#include "proofplan/commands.hpp"

int main(int argc, char **argv) { return proofplan::run_cli(argc, argv); }
