#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "meshpilot/prompt_builder.hpp"
#include "meshpilot/scenario_corpus.hpp"

namespace meshpilot {

enum class BackendKind {
    RemoteChat,
    ScriptedReplay,
    OraclePolicy,
};

struct BackendConfig {
    BackendKind kind = BackendKind::OraclePolicy;
    std::string name = "oracle";
    std::string endpoint_url;  // RemoteChat
    std::string model_name;
    double temperature = 0.0;
    int max_output_tokens = 64;
    int timeout_ms = 30000;
    int max_retries = 3;
    int retry_base_ms = 500;
    int max_concurrency = 4;
    std::map<std::string, std::string> replay_table;  // ScriptedReplay
};

/// Parses the key = value backend config format (see docs/formats.md).
BackendConfig backend_config_from_file(const std::string& path);
BackendConfig backend_config_from_text(const std::string& text, const std::string& origin);

struct ChatExchange {
    std::vector<ChatMessage> request;
    std::string response;
    double latency_ms = 0.0;
    int attempt_count = 1;
};

/// A chat backend. Implementations must tolerate concurrent chat() calls;
/// RemoteChat additionally bounds its in-flight requests by max_concurrency.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    /// messages must begin with exactly one system message followed by
    /// user/assistant turns. step_id routes scripted and oracle lookups;
    /// replay keys may carry an "@variant" suffix which falls back to the
    /// bare id when absent from the table.
    virtual ChatExchange chat(const std::vector<ChatMessage>& messages,
                              const std::string& step_id) = 0;

    virtual const BackendConfig& config() const = 0;
    virtual bool deterministic() const = 0;
};

/// Builds a backend from its config. OraclePolicy recomputes the labeled
/// action per step, so it binds the corpus the steps come from; the other
/// kinds ignore it. RemoteChat reads its bearer token from MESHPILOT_API_KEY.
std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config,
                                          const Corpus* corpus = nullptr);

}  // namespace meshpilot
