#include <iostream>

#include "cnnrom/io/cli.hpp"

int main(int argc, char** argv)
{
    return cnnrom::io::cli_main(argc, argv, std::cout, std::cerr);
}
