#include "bo4io/app/commands.hpp"

int main(int argc, char** argv) { return bo4io::app::main(argc, argv); }
