#include "pagc/cli.hpp"

int main(int argc, char** argv) {
    return pagc::run_cli(argc, argv);
}
