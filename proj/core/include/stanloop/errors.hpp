#pragma once

#include <stdexcept>
#include <string>

namespace stanloop {

/// Bad caller input (shape violations, NaN entries, invalid specs).
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Missing or inconsistent configuration (e.g. no CmdStan root).
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content; carries the 1-based line number when known.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, long line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Model failed to compile; message carries the compiler output.
class compile_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// External sampler process failed or violated the output contract.
class sampler_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Proposer protocol violation (timeout, nonzero exit, malformed JSON).
class proposer_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace stanloop
