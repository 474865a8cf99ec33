#include <iostream>

#include "sparse_lidar/app.hpp"

int main(int argc, char** argv)
{
    return sparse_lidar::cli_main(argc, argv, std::cout, std::cerr);
}
