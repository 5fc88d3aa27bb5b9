#include "aigt/pos.hpp"

#include <cctype>
#include <unordered_map>

#include "aigt/errors.hpp"
#include "aigt/io.hpp"

namespace aigt {

std::string to_string(PosTag tag) {
    switch (tag) {
        case PosTag::Noun: return "noun";
        case PosTag::Verb: return "verb";
        case PosTag::Adj: return "adj";
        case PosTag::Adv: return "adv";
        case PosTag::Other: return "other";
    }
    return "other";
}

namespace {

using Lexicon = std::unordered_map<std::string, PosTag>;

Lexicon build_en_lexicon() {
    Lexicon lex;
    for (const char* w :
         {"the", "a",  "an", "this", "that", "these", "those", "i",  "you", "he",  "she", "it",
          "we",  "they", "me", "him", "her", "us", "them", "my", "your", "his", "its", "our",
          "their", "in", "on", "at", "by", "for", "with", "from", "to", "of", "about", "as",
          "into", "over", "under", "and", "or", "but", "if", "because", "while", "although",
          "so", "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did",
          "have", "has", "had", "will", "would", "can", "could", "shall", "should", "may",
          "might", "must", "not", "no", "yes", "what", "which", "who", "when", "where", "how"}) {
        lex[w] = PosTag::Other;
    }
    for (const char* w : {"very", "quite", "always", "never", "often", "here", "there", "now",
                          "then", "too", "also", "just", "well", "soon", "again", "really"}) {
        lex[w] = PosTag::Adv;
    }
    for (const char* w :
         {"go",   "goes", "went", "make", "made", "say",  "said", "get",  "got",  "see",
          "saw",  "know", "knew", "think", "take", "took", "come", "came", "want", "use",
          "find", "give", "tell", "work", "call", "try",  "ask",  "need", "feel", "become",
          "leave", "put", "mean", "keep", "let",  "begin", "seem", "help", "show", "hear",
          "play", "run",  "move", "believe", "write", "read", "buy", "eat", "drink"}) {
        lex[w] = PosTag::Verb;
    }
    for (const char* w : {"good", "bad",  "new",  "old",  "great", "high", "low",  "big",
                          "small", "large", "long", "short", "own", "other", "same",
                          "different", "able", "best", "better", "nice", "happy", "sad",
                          "young", "early", "late", "strong", "easy", "hard", "fast"}) {
        lex[w] = PosTag::Adj;
    }
    for (const char* w : {"time", "year", "people", "way",  "day",   "man",   "woman", "child",
                          "world", "life", "hand",  "part", "eye",   "place", "week",  "case",
                          "point", "company", "number", "group", "problem", "fact", "house",
                          "city", "country", "water", "food", "book", "friend", "story"}) {
        lex[w] = PosTag::Noun;
    }
    return lex;
}

Lexicon build_nl_lexicon() {
    Lexicon lex;
    for (const char* w :
         {"de",  "het", "een", "dit", "dat", "deze", "die", "en", "of", "maar", "want", "dus",
          "als", "dan", "er",  "ik",  "jij", "je",  "hij", "zij", "ze", "wij", "we", "jullie",
          "u",   "mij", "me",  "hem", "haar", "ons", "hun", "mijn", "jouw", "niet", "geen",
          "wel", "ook", "nog", "al",  "te",  "van", "in",  "op", "aan", "bij", "voor", "naar",
          "uit", "met", "over", "onder", "tussen", "door", "wat", "wie", "waar", "hoe",
          "wanneer"}) {
        lex[w] = PosTag::Other;
    }
    for (const char* w : {"heel", "erg", "zeer", "altijd", "nooit", "vaak", "nu", "hier",
                          "daar", "snel", "weer", "net", "zelfs"}) {
        lex[w] = PosTag::Adv;
    }
    for (const char* w :
         {"is",   "zijn",  "was",  "waren",  "heb",   "hebt",  "heeft", "hebben", "had",
          "hadden", "word", "wordt", "worden", "werd", "werden", "kan",  "kunnen", "kon",
          "zal",  "zullen", "zou",  "moet",  "moeten", "mag",  "mogen", "wil",   "willen",
          "doe",  "doet",  "doen",  "deed",  "gaat",  "gaan",  "ging",  "komt",  "komen",
          "kwam", "maakt", "maken", "zegt",  "zeggen", "zei",  "ziet",  "zien",  "zag"}) {
        lex[w] = PosTag::Verb;
    }
    for (const char* w : {"goed", "slecht", "nieuw", "oud", "groot", "klein", "mooi", "lang",
                          "kort", "hoog", "laag", "jong", "sterk", "zwak", "vol", "leeg"}) {
        lex[w] = PosTag::Adj;
    }
    for (const char* w : {"tijd", "jaar", "mensen", "dag", "man", "vrouw", "kind", "wereld",
                          "leven", "hand", "deel", "oog", "plaats", "week", "punt", "bedrijf",
                          "nummer", "groep", "probleem", "feit", "huis", "stad", "land",
                          "water", "boek", "vriend", "verhaal"}) {
        lex[w] = PosTag::Noun;
    }
    return lex;
}

bool is_pure_alpha(const std::string& w) {
    if (w.empty()) return false;
    for (const char c : w) {
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

bool ends_with(const std::string& s, const char* suffix) {
    const size_t n = std::char_traits<char>::length(suffix);
    return s.size() > n && s.compare(s.size() - n, n, suffix) == 0;
}

PosTag en_suffix_tag(const std::string& w) {
    if (ends_with(w, "ly")) return PosTag::Adv;
    if (ends_with(w, "ing") || ends_with(w, "ed")) return PosTag::Verb;
    if (ends_with(w, "ness") || ends_with(w, "tion") || ends_with(w, "sion") ||
        ends_with(w, "ment") || ends_with(w, "ity")) {
        return PosTag::Noun;
    }
    if (ends_with(w, "ous") || ends_with(w, "ful") || ends_with(w, "ive") ||
        ends_with(w, "able") || ends_with(w, "ible") || ends_with(w, "ic") ||
        ends_with(w, "al")) {
        return PosTag::Adj;
    }
    return PosTag::Noun;
}

PosTag nl_suffix_tag(const std::string& w) {
    if (ends_with(w, "lijk") || ends_with(w, "ig")) return PosTag::Adj;
    if (ends_with(w, "heid") || ends_with(w, "ing") || ends_with(w, "tie") ||
        ends_with(w, "schap")) {
        return PosTag::Noun;
    }
    if (ends_with(w, "en")) return PosTag::Verb;
    return PosTag::Noun;
}

}  // namespace

PosTag pos_tag_word(const std::string& token, Language language) {
    static const Lexicon en_lexicon = build_en_lexicon();
    static const Lexicon nl_lexicon = build_nl_lexicon();
    if (language != Language::En && language != Language::Nl) {
        throw UnsupportedLanguageError("tagging supports en and nl only");
    }
    const Lexicon& lexicon = language == Language::En ? en_lexicon : nl_lexicon;

    const std::string lowered = to_lower_ascii(token);
    const auto it = lexicon.find(lowered);
    if (it != lexicon.end()) return it->second;
    if (!is_pure_alpha(lowered)) return PosTag::Other;
    return language == Language::En ? en_suffix_tag(lowered) : nl_suffix_tag(lowered);
}

std::vector<PosTag> pos_tag(const TokenSequence& tokens, Language language) {
    std::vector<PosTag> tags;
    tags.reserve(tokens.tokens.size());
    for (const std::string& t : tokens.tokens) tags.push_back(pos_tag_word(t, language));
    return tags;
}

}  // namespace aigt
