#include "meshpilot/prompt_builder.hpp"

#include "meshpilot/errors.hpp"

namespace meshpilot {

std::string variant_token(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::NoNewline: return "no_newline";
        case PromptVariant::OneNewline: return "one_newline";
        case PromptVariant::TwoNewlines: return "two_newlines";
    }
    return "one_newline";
}

PromptVariant variant_from_token(const std::string& token) {
    if (token == "no_newline") return PromptVariant::NoNewline;
    if (token == "one_newline") return PromptVariant::OneNewline;
    if (token == "two_newlines") return PromptVariant::TwoNewlines;
    throw ConfigError("unknown prompt variant: " + token);
}

std::string variant_label(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::NoNewline: return "Prompt ends without '\\n'";
        case PromptVariant::OneNewline: return "Prompt ends with '\\n'";
        case PromptVariant::TwoNewlines: return "Prompt ends with '\\n\\n'";
    }
    return "Prompt ends with '\\n'";
}

std::string ending_bytes(PromptVariant variant) {
    switch (variant) {
        case PromptVariant::NoNewline: return "";
        case PromptVariant::OneNewline: return "\n";
        case PromptVariant::TwoNewlines: return "\n\n";
    }
    return "\n";
}

namespace {

std::string node_name_list(int node_count) {
    std::string list;
    for (int i = 1; i <= node_count; ++i) {
        if (i > 1) {
            list += i == node_count ? " and " : ", ";
        }
        list += "node" + std::to_string(i);
    }
    return list;
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

}  // namespace

std::string build_system_prompt(int node_count, int start_channel) {
    std::string prompt =
        "You are a network monitoring expert, and you monitor a wireless mesh network. "
        "When there is a network security threat such as malicious traffic, jamming, "
        "etc., you need to take a valid action among the valid actions set to mitigate "
        "it. Sometimes, it will be a network performance related update. For example, "
        "when best neighbors of a node is received, you need to take action to update "
        "the neighbors for efficient routing. The neighbors update format is "
        "[<node id>, <node id>]. You also need to keep track of the local position of "
        "nodes and update them accordingly. The position update is provided as [x,y,z] "
        "coordinates. Regarding the network, there are {node_count} nodes on the mesh "
        "network named {node_names}. The mesh network is set to communicate on channel "
        "{channel} to start. Based on the network observations that you will receive, "
        "you are required to choose the best action from the valid action set to keep "
        "up the performance of network and to protect it against security threats. "
        "Please, answer that you understood the context.";
    prompt = replace_all(std::move(prompt), "{node_count}", std::to_string(node_count));
    prompt = replace_all(std::move(prompt), "{node_names}", node_name_list(node_count));
    prompt = replace_all(std::move(prompt), "{channel}", std::to_string(start_channel));
    return prompt;
}

std::string build_user_prompt(const std::string& observation,
                              const std::vector<Action>& valid, PromptVariant variant,
                              bool correct_tag_typo) {
    std::string prompt = "The network observations are: " + observation + "\n";
    prompt += "The valid actions set contains (#):\n";
    for (const Action& action : valid) {
        prompt += "# " + canonical_render(action) + "\n";
    }
    prompt += "INSTRUCTIONS:\n";
    prompt += "- You MUST choose only ONE action from the valid action set.\n";
    // "choosen" is the benchmarked prompt's own spelling.
    prompt += correct_tag_typo
                  ? "- You MUST identify your chosen action by the tag "
                    "<ACTION>your chosen action</ACTION>.\n"
                  : "- You MUST identify your chosen action by the tag "
                    "<ACTION>your choosen action</ACTION>.\n";
    prompt +=
        "- Do NOT respond with any other additional text, and you CANNOT decline to "
        "take an action.";
    return prompt + ending_bytes(variant);
}

}  // namespace meshpilot
