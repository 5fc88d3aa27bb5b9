#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aigt/features.hpp"
#include "aigt/types.hpp"

namespace aigt {

enum class PosTag : uint8_t { Noun, Verb, Adj, Adv, Other };

std::string to_string(PosTag tag);

// Lexicon-plus-suffix tagger for English and Dutch. Closed-class words come
// from bundled lists; everything else falls to suffix heuristics, defaulting
// to Noun for alphabetic tokens and Other for the rest.
PosTag pos_tag_word(const std::string& token, Language language);
std::vector<PosTag> pos_tag(const TokenSequence& tokens, Language language);

}  // namespace aigt
