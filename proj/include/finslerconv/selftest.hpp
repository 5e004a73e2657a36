#pragma once

#include <string>
#include <vector>

namespace finslerconv {

struct SuiteResult {
    std::string name;
    bool passed{false};
    std::string detail;
};

// Full property suite over all modules. `quick` shrinks the training-based
// checks so the suite stays well under its time budget on small machines.
std::vector<SuiteResult> run_selftest(bool quick = false);

}  // namespace finslerconv
