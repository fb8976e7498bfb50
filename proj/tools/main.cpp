#include "cli.hpp"

int main(int argc, char** argv) { return droopkit::cli::dispatch(argc, argv); }
