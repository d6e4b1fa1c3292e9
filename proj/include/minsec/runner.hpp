#pragma once

#include <string>

#include "minsec/config.hpp"
#include "minsec/errors.hpp"

namespace minsec {

// Executes the configured pipeline: build surface and connection, search for
// the mass-minimizing section, evaluate the energy family, analyze each
// singularity, and write report.json plus the CSV outputs into the output
// directory (MINSEC_OUTPUT_DIR overrides the configured one). Throws Error.
void run_pipeline(const RunConfig& cfg);

// CLI entry points: print one-line diagnostics to stderr and map errors to
// exit codes (2 for input and config problems, 3 for internal inconsistency,
// 1 for an oracle mismatch).
int run_command(const std::string& config_path);
int verify_oracles_command();
int mesh_info_command(const std::string& mesh_path);

int exit_code_for(ErrorCode code);

} // namespace minsec
