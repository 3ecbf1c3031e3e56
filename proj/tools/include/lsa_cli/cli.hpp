#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lsa/config.hpp"

namespace lsa::cli {

/// Splits `--a.b value` / `--a.b=value` pairs into config overrides. Throws UsageError on a
/// dangling flag or a token that is not a dotted flag.
config::Overrides parse_overrides(const std::vector<std::string>& extras);

/// Output root: explicit flag, else $LSA_OUT, else the config's run.out_dir.
std::string resolve_out_dir(const std::string& flag, const std::string& from_config);

/// Entry point shared by the binary and the tests. Returns the process exit status; a
/// nonzero status is always accompanied by a message on `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lsa::cli
