#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meshpilot {

class MeshpilotError : public std::runtime_error {
public:
    explicit MeshpilotError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public MeshpilotError {
public:
    explicit ConfigError(const std::string& what) : MeshpilotError(what) {}
};

class InvalidActionError : public MeshpilotError {
public:
    explicit InvalidActionError(const std::string& what) : MeshpilotError(what) {}
};

class NoCleanChannelError : public MeshpilotError {
public:
    explicit NoCleanChannelError(const std::string& what) : MeshpilotError(what) {}
};

class CorpusFormatError : public MeshpilotError {
public:
    CorpusFormatError(const std::string& what, std::size_t line)
        : MeshpilotError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class AlignmentSizeError : public MeshpilotError {
public:
    explicit AlignmentSizeError(const std::string& what) : MeshpilotError(what) {}
};

class BackendUnavailable : public MeshpilotError {
public:
    explicit BackendUnavailable(const std::string& what) : MeshpilotError(what) {}
};

class ReplayMissError : public MeshpilotError {
public:
    explicit ReplayMissError(const std::string& what) : MeshpilotError(what) {}
};

class ProtocolError : public MeshpilotError {
public:
    explicit ProtocolError(const std::string& what) : MeshpilotError(what) {}
};

}  // namespace meshpilot
