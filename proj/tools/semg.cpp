#include "semg/cli_app.hpp"

int main(int argc, char** argv) {
  return semg::cli::run(argc, argv);
}
