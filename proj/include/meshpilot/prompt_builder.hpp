#pragma once

#include <string>
#include <vector>

#include "meshpilot/action_grammar.hpp"

namespace meshpilot {

enum class Role { System, User, Assistant };

struct ChatMessage {
    Role role = Role::User;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

/// The user prompt's trailing-byte variants: "", "\n", "\n\n".
enum class PromptVariant {
    NoNewline,
    OneNewline,
    TwoNewlines,
};

/// "no_newline" / "one_newline" / "two_newlines" — used in corpora, replay
/// keys and CSV rows.
std::string variant_token(PromptVariant variant);
PromptVariant variant_from_token(const std::string& token);

/// Report label, e.g. "Prompt ends with '\n'".
std::string variant_label(PromptVariant variant);

std::string ending_bytes(PromptVariant variant);

/// The network-monitoring-expert system prompt, instantiated for a mesh of
/// node_count nodes starting on start_channel. (3, 36) reproduces the
/// benchmarked prompt byte for byte, acknowledgement request included.
std::string build_system_prompt(int node_count, int start_channel);

/// The observation + action list + INSTRUCTIONS user prompt. One "# " line
/// per action, then the instruction block, then the variant's trailing
/// bytes. correct_tag_typo rewrites the instruction block's "choosen" to
/// "chosen"; off by default, the benchmarked prompt carries the typo.
std::string build_user_prompt(const std::string& observation,
                              const std::vector<Action>& valid,
                              PromptVariant variant,
                              bool correct_tag_typo = false);

/// Fixed assistant acknowledgement inserted for deterministic backends in
/// place of the live model's "understood" turn.
inline const char* kAcknowledgementStub = "Understood.";

}  // namespace meshpilot
