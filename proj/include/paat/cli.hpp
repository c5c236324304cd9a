#pragma once

#include <string>
#include <vector>

namespace paat {

// Batch command surface: gen-data, train, eval, explain, ablate.
// Results go to files, diagnostics to stderr; exit status 0 iff no
// error. args excludes the program name.
int runCli(const std::vector<std::string>& args);

}  // namespace paat
