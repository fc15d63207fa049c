#include "styleobf/commands.hpp"

int main(int argc, char** argv) { return styleobf::run_cli(argc, argv); }
