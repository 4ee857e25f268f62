#pragma once

#include <string>
#include <vector>

namespace irsotfs {

struct CheckOutcome {
    std::string name;
    bool passed = false;
    std::string message;  // set on failure
};

/// Fast invariant suite: round trips, group identities, oracle
/// equivalences on tiny instances. `filter` keeps checks whose name
/// contains it. The IRSOTFS_FAULT environment variable injects known
/// corruptions (currently "isfft_scale") so the suite can be shown to
/// catch them.
std::vector<CheckOutcome> run_checks(const std::string& filter = "");

}  // namespace irsotfs
