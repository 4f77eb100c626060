#pragma once

#include <stdexcept>
#include <string>

namespace rkbug {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: bad configuration, unknown names, non-divisible step sizes.
class ConfigError : public Error
{
public:
    using Error::Error;
};

/// A non-finite value appeared while integrating.
class BlowUpError : public Error
{
public:
    BlowUpError(int stage, const std::string& what)
        : Error(what), stage_(stage)
    {}

    static BlowUpError at_stage(int stage)
    {
        return BlowUpError(stage, "blow-up at stage " + std::to_string(stage));
    }

    int stage() const noexcept { return stage_; }

    /// Step index of the failure inside a trajectory, -1 when unknown.
    long step() const noexcept { return step_; }
    void set_step(long k) noexcept { step_ = k; }

private:
    int stage_;
    long step_ = -1;
};

} // namespace rkbug
