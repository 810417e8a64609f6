#include "reprompt/cli.hpp"

int main(int argc, char** argv) { return reprompt::run_cli(argc, argv); }
