#include <iostream>

#include "cran/app.hpp"

int main(int argc, char** argv) { return cran::app::main_entry(argc, argv, std::cout, std::cerr); }
