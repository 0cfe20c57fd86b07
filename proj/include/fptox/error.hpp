#pragma once

#include <stdexcept>
#include <string>

namespace fptox {

// Errors caused by bad input (missing files, malformed records, invalid
// configs). The CLI maps these to exit code 1; anything else is exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Pipeline failure annotated with the stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace fptox
