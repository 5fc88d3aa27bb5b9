#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aigt {

enum class Label : uint8_t { Human, Ai };
enum class Language : uint8_t { En, Nl, Other };
enum class Domain : uint8_t { News, Reviews, Twitter, Other };

// One labeled text. The positive class for every detector is Ai.
struct Document {
    std::string id;
    std::string text;
    Label label = Label::Human;
    Language language = Language::Other;
    Domain domain = Domain::Other;
    std::optional<std::string> source;
};

struct DatasetSplit {
    std::vector<Document> train;
    std::vector<Document> validation;
    std::vector<Document> test;
    std::vector<std::string> strata_keys;
};

enum class AugmentOp : uint8_t {
    Synonym,
    Swap,
    Insert,
    Delete,
    Spelling,
    BackTranslate,
};

struct AugmentationRecord {
    std::string parent_id;
    std::string variant_id;
    std::vector<AugmentOp> ops_applied;
    uint64_t seed = 0;
};

std::string to_string(Label l);
std::string to_string(Language l);
std::string to_string(Domain d);
std::string to_string(AugmentOp op);

// Parsers accept the lowercase wire forms; label must be "human"/"ai",
// unknown language/domain values map to Other.
Label parse_label(const std::string& s);
Language parse_language(const std::string& s);
Domain parse_domain(const std::string& s);
AugmentOp parse_augment_op(const std::string& s);

}  // namespace aigt
