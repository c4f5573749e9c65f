#pragma once

namespace rsub {

/// CLI entry point (generate / attack / solve / estimate / mean / sweep /
/// plot). Shared by the binary and tests so pipelines can be cross-checked
/// in-process against library calls.
int cli_main(int argc, const char* const* argv);

}  // namespace rsub
