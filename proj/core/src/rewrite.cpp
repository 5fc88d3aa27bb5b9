#include "aigt/rewrite.hpp"

#include <algorithm>
#include <cctype>

#include "aigt/errors.hpp"
#include "aigt/io.hpp"

namespace aigt {

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Hsr: return "hsr";
        case Strategy::Psr: return "psr";
        case Strategy::Gpt: return "gpt";
        case Strategy::GptGenre: return "gpt_genre";
    }
    return "hsr";
}

Strategy parse_strategy(const std::string& s) {
    if (s == "hsr") return Strategy::Hsr;
    if (s == "psr") return Strategy::Psr;
    if (s == "gpt") return Strategy::Gpt;
    if (s == "gpt_genre") return Strategy::GptGenre;
    throw ParseError("unknown strategy: '" + s + "'");
}

std::string to_string(SkipReason reason) {
    switch (reason) {
        case SkipReason::Oov: return "OOV";
        case SkipReason::NoCandidate: return "NO_CANDIDATE";
        case SkipReason::NoChange: return "NO_CHANGE";
        case SkipReason::ClientFailure: return "CLIENT_ERROR";
    }
    return "NO_CANDIDATE";
}

SkipReason parse_skip_reason(const std::string& s) {
    if (s == "OOV") return SkipReason::Oov;
    if (s == "NO_CANDIDATE") return SkipReason::NoCandidate;
    if (s == "NO_CHANGE") return SkipReason::NoChange;
    if (s == "CLIENT_ERROR") return SkipReason::ClientFailure;
    throw ParseError("unknown skip reason: '" + s + "'");
}

std::string match_case(const std::string& original, const std::string& replacement) {
    const bool has_alpha = std::any_of(original.begin(), original.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c));
    });
    if (!has_alpha || replacement.empty()) return replacement;

    const bool all_upper =
        original.size() > 1 && std::all_of(original.begin(), original.end(), [](char c) {
            return !std::isalpha(static_cast<unsigned char>(c)) ||
                   std::isupper(static_cast<unsigned char>(c));
        });
    if (all_upper) {
        std::string out = replacement;
        for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return out;
    }
    if (std::isupper(static_cast<unsigned char>(original.front()))) {
        std::string out = replacement;
        out.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(out.front())));
        return out;
    }
    return replacement;
}

namespace {

std::optional<std::string> neighbor_replace(const std::string& token, const EmbeddingSpace& space,
                                            uint64_t min_human_freq, size_t top_n,
                                            const std::optional<PosTag>& required_tag,
                                            Language language) {
    for (const auto& [candidate, cosine] : space.nearest(token, top_n)) {
        const auto freq = space.human_frequency.find(candidate);
        if (freq == space.human_frequency.end() || freq->second < min_human_freq) continue;
        if (required_tag && pos_tag_word(candidate, language) != *required_tag) continue;
        return candidate;
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> hsr_replace(const std::string& token, const EmbeddingSpace& space,
                                       uint64_t min_human_freq, size_t top_n) {
    return neighbor_replace(token, space, min_human_freq, top_n, std::nullopt, Language::En);
}

std::optional<std::string> psr_replace(const std::string& token, PosTag tag,
                                       const EmbeddingSpace& space, uint64_t min_human_freq,
                                       size_t top_n, Language language) {
    return neighbor_replace(token, space, min_human_freq, top_n, tag, language);
}

std::string gpt_prompt(const std::string& token, const std::string& text) {
    return "Replace '" + token + "' with a more human-like word in this text: '" + text + "'";
}

std::string gpt_genre_prompt(const std::string& token, const std::string& text, Domain domain) {
    return "Replace '" + token + "' in this " + to_string(domain) +
           " text with a more human-like word: '" + text + "'";
}

std::optional<std::string> parse_replacement_reply(const std::string& reply) {
    // Prefer the first quoted span; replies often wrap the answer in quotes
    // while leading with prose ("The word is: \"nice\".").
    size_t begin = std::string::npos;
    size_t end = std::string::npos;
    for (size_t i = 0; i < reply.size(); ++i) {
        if (reply[i] != '"' && reply[i] != '\'') continue;
        const size_t close = reply.find(reply[i], i + 1);
        if (close == std::string::npos) break;
        begin = i + 1;
        end = close;
        break;
    }

    auto first_word = [](const std::string& s) -> std::optional<std::string> {
        std::string word;
        for (const char c : s) {
            if (std::isalpha(static_cast<unsigned char>(c))) {
                word.push_back(c);
            } else if (!word.empty()) {
                return word;
            }
        }
        if (word.empty()) return std::nullopt;
        return word;
    };

    if (begin != std::string::npos) {
        if (const auto word = first_word(reply.substr(begin, end - begin))) return word;
    }
    return first_word(reply);
}

std::optional<std::string> gpt_replace(const std::string& token, const std::string& text,
                                       LlmClient& client) {
    return parse_replacement_reply(client.complete(gpt_prompt(token, text)));
}

std::optional<std::string> gpt_genre_replace(const std::string& token, const std::string& text,
                                             Domain domain, LlmClient& client) {
    return parse_replacement_reply(client.complete(gpt_genre_prompt(token, text, domain)));
}

ReplacementPlan build_plan(const Document& doc, const TokenSequence& tokens,
                           const TokenSelection& selection, Strategy strategy,
                           const RewriteDeps& deps, Language language) {
    if (!selection.doc_id.empty() && selection.doc_id != doc.id) {
        throw IdMismatchError("selection is for document '" + selection.doc_id + "', not '" +
                              doc.id + "'");
    }
    const bool needs_space = strategy == Strategy::Hsr || strategy == Strategy::Psr;
    if (needs_space && !deps.space) throw Error("strategy needs an embedding space");
    if (!needs_space && !deps.client) throw Error("strategy needs a client");

    ReplacementPlan plan;
    plan.doc_id = doc.id;
    plan.strategy = strategy;

    for (const size_t pos : selection.positions) {
        if (pos >= tokens.tokens.size()) {
            throw PositionOutOfRangeError("selected position " + std::to_string(pos) +
                                          " exceeds token count " +
                                          std::to_string(tokens.tokens.size()));
        }
        const std::string& original = tokens.tokens[pos];

        std::optional<std::string> candidate;
        if (needs_space) {
            if (!deps.space->row_of(original)) {
                plan.skipped.push_back(Skip{pos, SkipReason::Oov});
                continue;
            }
            candidate = strategy == Strategy::Hsr
                            ? hsr_replace(original, *deps.space, deps.min_human_freq, deps.top_n)
                            : psr_replace(original, pos_tag_word(original, language), *deps.space,
                                          deps.min_human_freq, deps.top_n, language);
        } else {
            try {
                candidate = strategy == Strategy::Gpt
                                ? gpt_replace(original, doc.text, *deps.client)
                                : gpt_genre_replace(original, doc.text, doc.domain, *deps.client);
            } catch (const ClientError&) {
                if (deps.fail_fast) throw;
                plan.skipped.push_back(Skip{pos, SkipReason::ClientFailure});
                continue;
            }
        }

        if (!candidate) {
            plan.skipped.push_back(Skip{pos, SkipReason::NoCandidate});
            continue;
        }
        const std::string replacement = match_case(original, *candidate);
        if (replacement == original ||
            to_lower_ascii(replacement) == to_lower_ascii(original)) {
            plan.skipped.push_back(Skip{pos, SkipReason::NoChange});
            continue;
        }
        plan.substitutions.push_back(Substitution{pos, original, replacement});
    }

    std::sort(plan.substitutions.begin(), plan.substitutions.end(),
              [](const Substitution& a, const Substitution& b) { return a.position < b.position; });
    std::sort(plan.skipped.begin(), plan.skipped.end(),
              [](const Skip& a, const Skip& b) { return a.position < b.position; });
    return plan;
}

RewrittenDocument apply_plan(const Document& doc, const TokenSequence& tokens,
                             const ReplacementPlan& plan) {
    if (!plan.doc_id.empty() && plan.doc_id != doc.id) {
        throw IdMismatchError("plan is for document '" + plan.doc_id + "', not '" + doc.id + "'");
    }
    if (tokens.tokens.size() != tokens.offsets.size()) {
        throw StaleOffsetsError("token/offset length mismatch");
    }
    for (size_t i = 0; i < tokens.tokens.size(); ++i) {
        const auto [start, end] = tokens.offsets[i];
        if (end > doc.text.size() || start > end ||
            doc.text.compare(start, end - start, tokens.tokens[i]) != 0) {
            throw StaleOffsetsError("offsets no longer match the document text");
        }
    }

    std::vector<Substitution> ordered = plan.substitutions;
    std::sort(ordered.begin(), ordered.end(),
              [](const Substitution& a, const Substitution& b) { return a.position < b.position; });

    std::string out;
    out.reserve(doc.text.size());
    size_t cursor = 0;
    for (const Substitution& sub : ordered) {
        if (sub.position >= tokens.tokens.size()) {
            throw PositionOutOfRangeError("substitution position " + std::to_string(sub.position) +
                                          " exceeds token count " +
                                          std::to_string(tokens.tokens.size()));
        }
        if (tokens.tokens[sub.position] != sub.original) {
            throw StaleOffsetsError("token at position " + std::to_string(sub.position) +
                                    " is no longer '" + sub.original + "'");
        }
        const auto [start, end] = tokens.offsets[sub.position];
        out.append(doc.text, cursor, start - cursor);
        out += sub.replacement;
        cursor = end;
    }
    out.append(doc.text, cursor, doc.text.size() - cursor);

    RewrittenDocument result;
    result.parent_id = doc.id;
    result.text = std::move(out);
    result.plan = plan;
    return result;
}

}  // namespace aigt
