#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kurv::cli {

// One tool invocation; `args` excludes the program name.  Human-readable
// summary (or the full JSON envelope under --json) goes to `out`, errors to
// `err`.  Exit code 0 on success, 1 on usage or runtime errors, 2 when a
// certification ran to completion without certifying.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

// Same, wired to stdout/stderr.
int run_command(const std::vector<std::string>& args);

}  // namespace kurv::cli
