#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stanloop::subprocess {

struct CommandResult {
    int exit_code = -1;
    std::string out;
    std::string err;
    bool timed_out = false;
};

/// Run argv to completion, feeding stdin_data and capturing both output
/// streams. timeout_ms < 0 means no timeout; on expiry the child is
/// killed and timed_out is set.
CommandResult run_command(const std::vector<std::string>& argv, const std::string& stdin_data = {},
                          long timeout_ms = -1,
                          const std::optional<std::filesystem::path>& cwd = {});

/// Run several commands with at most max_parallel in flight; results
/// are returned in input order.
std::vector<CommandResult> run_parallel(const std::vector<std::vector<std::string>>& commands,
                                        std::size_t max_parallel);

}  // namespace stanloop::subprocess
