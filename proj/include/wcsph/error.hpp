#pragma once

#include <stdexcept>
#include <string>

namespace wcsph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent configuration document. Carries the offending
/// key path and 1-based line number (0 when not tied to a line).
class ConfigError : public Error {
public:
    ConfigError(std::string key, int line, const std::string& what)
        : Error(format(key, line, what)), key_(std::move(key)), line_(line) {}

    const std::string& key() const noexcept { return key_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& key, int line, const std::string& what) {
        std::string msg = "config";
        if (line > 0) msg += ":" + std::to_string(line);
        if (!key.empty()) msg += " [" + key + "]";
        return msg + ": " + what;
    }

    std::string key_;
    int line_;
};

/// Non-finite state detected during a run.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(long step, const std::string& quantity, std::size_t particle)
        : Error("non-finite " + quantity + " at step " + std::to_string(step) + " (particle " +
                std::to_string(particle) + ")"),
          step_(step),
          quantity_(quantity),
          particle_(particle) {}

    long step() const noexcept { return step_; }
    const std::string& quantity() const noexcept { return quantity_; }
    std::size_t particle() const noexcept { return particle_; }

private:
    long step_;
    std::string quantity_;
    std::size_t particle_;
};

/// Filesystem failure while writing output.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace wcsph
