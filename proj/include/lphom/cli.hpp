#pragma once

#include <ostream>

namespace lphom {

/// Subcommands geom, check-unfold, cell, micro, macro, converge. Settings come
/// from --config FILE and are overridden by --KEY VALUE flags. Returns 0 on
/// success, 1 when a run or criterion fails, 2 on a usage error.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lphom
