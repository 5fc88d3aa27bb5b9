#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aigt/embeddings.hpp"
#include "aigt/explain.hpp"
#include "aigt/features.hpp"
#include "aigt/llmclient.hpp"
#include "aigt/pos.hpp"
#include "aigt/types.hpp"

namespace aigt {

enum class Strategy : uint8_t { Hsr, Psr, Gpt, GptGenre };

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& s);

enum class SkipReason : uint8_t { Oov, NoCandidate, NoChange, ClientFailure };

std::string to_string(SkipReason reason);
SkipReason parse_skip_reason(const std::string& s);

struct Substitution {
    size_t position = 0;  // token index in the original document
    std::string original;
    std::string replacement;
};

struct Skip {
    size_t position = 0;
    SkipReason reason = SkipReason::Oov;
};

struct ReplacementPlan {
    std::string doc_id;
    Strategy strategy = Strategy::Hsr;
    std::vector<Substitution> substitutions;  // ascending by position
    std::vector<Skip> skipped;                // ascending by position
};

struct RewriteDeps {
    const EmbeddingSpace* space = nullptr;  // Hsr/Psr
    uint64_t min_human_freq = 3;
    size_t top_n = 10;
    LlmClient* client = nullptr;  // Gpt/GptGenre
    bool fail_fast = false;       // rethrow client errors instead of skipping
};

// Nearest human-corpus neighbor of the token, excluding the token itself and
// its case variants, restricted to terms seen at least min_human_freq times.
std::optional<std::string> hsr_replace(const std::string& token, const EmbeddingSpace& space,
                                       uint64_t min_human_freq, size_t top_n);

// As hsr_replace, but the candidate must also share the token's POS tag.
std::optional<std::string> psr_replace(const std::string& token, PosTag tag,
                                       const EmbeddingSpace& space, uint64_t min_human_freq,
                                       size_t top_n, Language language);

std::string gpt_prompt(const std::string& token, const std::string& text);
std::string gpt_genre_prompt(const std::string& token, const std::string& text, Domain domain);

// First token of the first quoted span in the reply, else the first
// alphabetic token of the reply; trailing punctuation stripped.
std::optional<std::string> parse_replacement_reply(const std::string& reply);

std::optional<std::string> gpt_replace(const std::string& token, const std::string& text,
                                       LlmClient& client);
std::optional<std::string> gpt_genre_replace(const std::string& token, const std::string& text,
                                             Domain domain, LlmClient& client);

// Resolves every selected position to a substitution or a typed skip. The
// replacement inherits the original's case pattern (all-caps or title case).
ReplacementPlan build_plan(const Document& doc, const TokenSequence& tokens,
                           const TokenSelection& selection, Strategy strategy,
                           const RewriteDeps& deps, Language language = Language::En);

struct RewrittenDocument {
    std::string parent_id;
    std::string text;
    ReplacementPlan plan;
};

// Byte-exact splice of replacements at the token offsets; everything between
// tokens is preserved. Offsets must still match the document text.
RewrittenDocument apply_plan(const Document& doc, const TokenSequence& tokens,
                             const ReplacementPlan& plan);

std::string match_case(const std::string& original, const std::string& replacement);

}  // namespace aigt
