#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "aigt/llmclient.hpp"
#include "aigt/types.hpp"

namespace aigt {

enum class DatasetFormat { Jsonl, Csv };

// JSONL: one object per line, keys id/text/label/language/domain/source.
// CSV: same header names, UTF-8, RFC-4180 quoting.
std::vector<Document> load_dataset(const std::string& path, DatasetFormat format);
std::vector<Document> parse_dataset(const std::string& content, DatasetFormat format);
void save_dataset(const std::vector<Document>& docs, const std::string& path, DatasetFormat format);

struct SplitSpec {
    double test_fraction = 0.1;
    double validation_fraction = 0.0;  // drawn from the train side, same per-stratum rounding
    std::vector<std::string> strata;   // subset of {"label","language","domain"}
    uint64_t seed = 0;
};

// Per stratum, round(test_fraction * size) documents go to test, ties toward
// the larger test set. Deterministic given the seed.
DatasetSplit stratified_split(const std::vector<Document>& docs, const SplitSpec& spec);

class SynonymSource {
public:
    virtual ~SynonymSource() = default;
    virtual std::vector<std::string> lookup(const std::string& token) const = 0;
};

// Flat lexicon file: one line per entry, "term syn1 syn2 ...". Lookup is
// case-folded.
class LexiconSynonyms : public SynonymSource {
public:
    explicit LexiconSynonyms(std::map<std::string, std::vector<std::string>> entries);
    static LexiconSynonyms from_file(const std::string& path);
    std::vector<std::string> lookup(const std::string& token) const override;

private:
    std::map<std::string, std::vector<std::string>> entries_;
};

// One op is chosen per variant, uniformly among the configured ops; an op
// that cannot apply falls back to the remaining ones, and a variant for
// which nothing applies is not emitted. Variants copy the parent's label,
// language, and domain.
std::vector<std::pair<Document, AugmentationRecord>> augment(
    const Document& doc, const std::vector<AugmentOp>& ops, size_t n_variants,
    uint64_t seed, const SynonymSource* lexicon = nullptr, LlmClient* client = nullptr);

// True iff every record's parent_id sits in split.train.
bool augmentation_applies_only_to_train(const DatasetSplit& split,
                                        const std::vector<AugmentationRecord>& records);

}  // namespace aigt
