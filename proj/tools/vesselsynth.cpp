#include "vesselsynth/commands.hpp"

int main(int argc, char** argv) { return vsynth::cli::main(argc, argv); }
