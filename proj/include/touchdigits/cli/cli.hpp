#pragma once

namespace touchdigits::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // anything not listed below
  kUsage = 2,        // unknown flag, bad flag value, invalid request
  kIo = 3,           // missing or unwritable file
  kAuditFailed = 4,  // architecture does not match the reference tables
  kNumeric = 5,      // non-finite loss during training
  kFormat = 6,       // malformed dataset, checkpoint or request file
};

// Parses argv, runs one subcommand and returns the exit code. Errors are
// reported as a single JSON line on stderr:
//   {"error":"<code>","exit_code":N,"message":"..."}
int run(int argc, const char* const* argv);

}  // namespace touchdigits::cli
