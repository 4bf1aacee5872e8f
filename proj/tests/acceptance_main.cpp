// Acceptance gate: runs every criterion, prints one pass/fail line each,
// exits nonzero if any fails. The same runner backs `vpstab verify`.

#include <cstdio>
#include <cstring>

#include "vpstab/acceptance.hpp"

int main(int argc, char** argv) {
    std::string suite = "all";
    if (argc > 2 && std::strcmp(argv[1], "--suite") == 0) suite = argv[2];
    const bool ok = vpstab::accept::run_suite(suite);
    std::printf("%s\n", ok ? "ACCEPTANCE: all criteria passed" : "ACCEPTANCE: FAILURES present");
    return ok ? 0 : 1;
}
