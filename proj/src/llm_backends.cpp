#include "meshpilot/llm_backends.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "meshpilot/errors.hpp"
#include "meshpilot/rng.hpp"

namespace meshpilot {

namespace {

using nlohmann::json;

std::string role_token(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

/// Bounds concurrent chat calls per backend.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int limit) : limit_(limit) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

struct LimiterGuard {
    explicit LimiterGuard(ConcurrencyLimiter& limiter) : limiter_(limiter) {
        limiter_.acquire();
    }
    ~LimiterGuard() { limiter_.release(); }
    LimiterGuard(const LimiterGuard&) = delete;
    LimiterGuard& operator=(const LimiterGuard&) = delete;
    ConcurrencyLimiter& limiter_;
};

/// Per-thread jitter stream; retry timing is not part of the reproducible
/// surface, deterministic backends never sleep.
std::uint64_t jitter_below(std::uint64_t n) {
    thread_local SplitMix64 rng(
        static_cast<std::uint64_t>(
            std::chrono::steady_clock::now().time_since_epoch().count()) ^
        std::hash<std::thread::id>{}(std::this_thread::get_id()));
    return n == 0 ? 0 : rng.next_below(n);
}

void validate_common(const BackendConfig& config) {
    if (config.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (config.max_output_tokens < 1) throw ConfigError("max_output_tokens must be >= 1");
    if (config.timeout_ms < 1) throw ConfigError("timeout_ms must be >= 1");
    if (config.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (config.max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
    if (config.name.empty()) throw ConfigError("backend needs a name");
}

/// Replay and oracle tables are keyed by step id; episode lookups arrive as
/// "id@variant" and fall back to the bare id.
template <typename Map>
const typename Map::mapped_type* lookup_with_variant_fallback(const Map& table,
                                                              const std::string& step_id) {
    if (const auto it = table.find(step_id); it != table.end()) return &it->second;
    const auto at = step_id.rfind('@');
    if (at != std::string::npos) {
        if (const auto it = table.find(step_id.substr(0, at)); it != table.end()) {
            return &it->second;
        }
    }
    return nullptr;
}

class ScriptedReplayBackend final : public ChatBackend {
public:
    explicit ScriptedReplayBackend(BackendConfig config) : config_(std::move(config)) {}

    ChatExchange chat(const std::vector<ChatMessage>& messages,
                      const std::string& step_id) override {
        const std::string* response =
            lookup_with_variant_fallback(config_.replay_table, step_id);
        if (!response) {
            throw ReplayMissError("no replay entry for step " + step_id);
        }
        return ChatExchange{messages, *response, 0.0, 1};
    }

    const BackendConfig& config() const override { return config_; }
    bool deterministic() const override { return true; }

private:
    BackendConfig config_;
};

class OraclePolicyBackend final : public ChatBackend {
public:
    OraclePolicyBackend(BackendConfig config, const Corpus& corpus)
        : config_(std::move(config)) {
        for (const ScenarioStep& step : corpus.steps) {
            table_.emplace(step.id, std::pair{step.event, step.mesh_snapshot});
        }
    }

    ChatExchange chat(const std::vector<ChatMessage>& messages,
                      const std::string& step_id) override {
        const auto* entry = lookup_with_variant_fallback(table_, step_id);
        if (!entry) {
            throw ReplayMissError("oracle backend has no step " + step_id);
        }
        const Action action = oracle_action(entry->first, entry->second);
        return ChatExchange{messages, "<ACTION>" + canonical_render(action) + "</ACTION>",
                            0.0, 1};
    }

    const BackendConfig& config() const override { return config_; }
    bool deterministic() const override { return true; }

private:
    BackendConfig config_;
    std::unordered_map<std::string, std::pair<NetworkEvent, MeshState>> table_;
};

class RemoteChatBackend final : public ChatBackend {
public:
    explicit RemoteChatBackend(BackendConfig config)
        : config_(std::move(config)), limiter_(config_.max_concurrency) {}

    ChatExchange chat(const std::vector<ChatMessage>& messages,
                      const std::string& step_id) override {
        (void)step_id;
        LimiterGuard guard(limiter_);

        json body;
        body["model"] = config_.model_name;
        body["temperature"] = config_.temperature;
        body["max_tokens"] = config_.max_output_tokens;
        json turns = json::array();
        for (const ChatMessage& message : messages) {
            turns.push_back({{"role", role_token(message.role)}, {"content", message.content}});
        }
        body["messages"] = std::move(turns);
        const std::string payload = body.dump();

        httplib::Headers headers;
        if (const char* key = std::getenv("MESHPILOT_API_KEY"); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        const double started = now_ms();
        std::string last_failure = "no attempt made";
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                // Exponential backoff with equal jitter: [full/2, full].
                const int doublings = std::min(attempt - 1, 20);
                const std::uint64_t full =
                    static_cast<std::uint64_t>(config_.retry_base_ms) << doublings;
                const std::uint64_t delay = full / 2 + jitter_below(full / 2 + 1);
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            }

            httplib::Client client(config_.endpoint_url);
            client.set_connection_timeout(config_.timeout_ms / 1000,
                                          (config_.timeout_ms % 1000) * 1000);
            client.set_read_timeout(config_.timeout_ms / 1000,
                                    (config_.timeout_ms % 1000) * 1000);
            client.set_write_timeout(config_.timeout_ms / 1000,
                                     (config_.timeout_ms % 1000) * 1000);

            auto result =
                client.Post("/v1/chat/completions", headers, payload, "application/json");
            if (!result) {
                last_failure = "transport error: " + httplib::to_string(result.error());
                continue;
            }
            if (result->status == 429 || result->status >= 500) {
                last_failure = "HTTP " + std::to_string(result->status);
                continue;
            }
            if (result->status != 200) {
                throw ProtocolError("unexpected HTTP " + std::to_string(result->status) +
                                    " from " + config_.endpoint_url);
            }

            std::string content;
            try {
                const json reply = json::parse(result->body);
                content = reply.at("choices").at(0).at("message").at("content")
                              .get<std::string>();
            } catch (const json::exception& ex) {
                throw ProtocolError(std::string("malformed chat completion reply: ") +
                                    ex.what());
            }
            return ChatExchange{messages, content, now_ms() - started, attempt + 1};
        }

        throw BackendUnavailable("retries exhausted for " + config_.endpoint_url + ": " +
                                 last_failure);
    }

    const BackendConfig& config() const override { return config_; }
    bool deterministic() const override { return false; }

private:
    BackendConfig config_;
    ConcurrencyLimiter limiter_;
};

BackendKind kind_from_token(const std::string& token) {
    if (token == "remote" || token == "remote_chat") return BackendKind::RemoteChat;
    if (token == "replay" || token == "scripted_replay") return BackendKind::ScriptedReplay;
    if (token == "oracle" || token == "oracle_policy") return BackendKind::OraclePolicy;
    throw ConfigError("unknown backend kind: " + token);
}

}  // namespace

BackendConfig backend_config_from_text(const std::string& text, const std::string& origin) {
    BackendConfig config;
    std::string replay_file;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("bad backend config line in " + origin + ": " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "kind") config.kind = kind_from_token(value);
        else if (key == "name") config.name = value;
        else if (key == "endpoint_url") config.endpoint_url = value;
        else if (key == "model_name") config.model_name = value;
        else if (key == "temperature") config.temperature = std::stod(value);
        else if (key == "max_output_tokens") config.max_output_tokens = std::stoi(value);
        else if (key == "timeout_ms") config.timeout_ms = std::stoi(value);
        else if (key == "max_retries") config.max_retries = std::stoi(value);
        else if (key == "retry_base_ms") config.retry_base_ms = std::stoi(value);
        else if (key == "max_concurrency") config.max_concurrency = std::stoi(value);
        else if (key == "replay_file") replay_file = value;
        else throw ConfigError("unknown backend config key in " + origin + ": " + key);
    }

    if (!replay_file.empty()) {
        std::filesystem::path path(replay_file);
        if (path.is_relative() && !origin.empty() && origin != "<inline>") {
            path = std::filesystem::path(origin).parent_path() / path;
        }
        std::ifstream table_in(path);
        if (!table_in) {
            throw ConfigError("cannot open replay file: " + path.string());
        }
        json table;
        try {
            table_in >> table;
        } catch (const json::exception& ex) {
            throw ConfigError("bad replay file " + path.string() + ": " + ex.what());
        }
        for (const auto& [key, value] : table.items()) {
            config.replay_table[key] = value.get<std::string>();
        }
    }
    return config;
}

BackendConfig backend_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open backend config: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return backend_config_from_text(buffer.str(), path);
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config, const Corpus* corpus) {
    validate_common(config);
    switch (config.kind) {
        case BackendKind::RemoteChat:
            if (config.endpoint_url.empty() || config.model_name.empty()) {
                throw ConfigError("remote backend needs endpoint_url and model_name");
            }
            return std::make_unique<RemoteChatBackend>(config);
        case BackendKind::ScriptedReplay:
            if (config.replay_table.empty()) {
                throw ConfigError("scripted replay backend needs a replay table");
            }
            return std::make_unique<ScriptedReplayBackend>(config);
        case BackendKind::OraclePolicy:
            if (!corpus) {
                throw ConfigError("oracle backend needs a corpus to recompute labels from");
            }
            return std::make_unique<OraclePolicyBackend>(config, *corpus);
    }
    throw ConfigError("unknown backend kind");
}

}  // namespace meshpilot
