#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aigt/errors.hpp"
#include "aigt/metrics.hpp"
#include "aigt/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace aigt;
using testsupport::oracle_bleu;
using testsupport::oracle_rouge1;
using testsupport::oracle_rougeL;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> w) {
    return std::vector<std::string>(w.begin(), w.end());
}

std::vector<std::string> random_tokens(Rng& rng, size_t max_len, size_t alphabet) {
    const size_t len = rng.below(max_len + 1);
    std::vector<std::string> out;
    out.reserve(len);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(std::string(1, static_cast<char>('a' + rng.below(alphabet))));
    }
    return out;
}

}  // namespace

TEST_CASE("bleu scores identical sequences as exactly 1") {
    const auto ref = words({"the", "cat", "sat", "down", "today"});
    CHECK(bleu(ref, ref).value == 1.0);
    CHECK_FALSE(bleu(ref, ref).empty_hypothesis);
}

TEST_CASE("bleu one-token-substitution value matches the closed form") {
    const auto ref = words({"a", "b", "c", "d"});
    const auto hyp = words({"a", "b", "c", "x"});
    // p1=3/4, p2=2/3, p3=1/2, p4 smoothed to 1/2, no brevity penalty.
    const double expected = std::pow((3.0 / 4.0) * (2.0 / 3.0) * (1.0 / 2.0) * (1.0 / 2.0), 0.25);
    CHECK(bleu(ref, hyp).value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(bleu(ref, hyp).value == doctest::Approx(oracle_bleu(ref, hyp)).epsilon(1e-12));
}

TEST_CASE("bleu flags an empty hypothesis instead of crashing") {
    const auto ref = words({"a", "b"});
    const BleuScore s = bleu(ref, {});
    CHECK(s.value == 0.0);
    CHECK(s.empty_hypothesis);
    const BleuScore both = bleu({}, {});
    CHECK(both.value == 1.0);
    CHECK(both.empty_hypothesis);
}

TEST_CASE("bleu applies the brevity penalty to short hypotheses") {
    const auto ref = words({"a", "b", "c", "d", "e", "f"});
    const auto hyp = words({"a", "b", "c"});
    const double full = bleu(ref, words({"a", "b", "c", "d", "e", "f"})).value;
    const double shortened = bleu(ref, hyp).value;
    CHECK(shortened < full);
    CHECK(shortened == doctest::Approx(oracle_bleu(ref, hyp)).epsilon(1e-12));
}

TEST_CASE("bleu and rouge agree with brute-force recomputation on random pairs") {
    Rng rng(20240817);
    for (int trial = 0; trial < 300; ++trial) {
        const auto ref = random_tokens(rng, 8, 4);
        const auto hyp = random_tokens(rng, 8, 4);
        const BleuScore b = bleu(ref, hyp);
        CHECK(b.value == doctest::Approx(oracle_bleu(ref, hyp)).epsilon(1e-9));
        CHECK(rouge1(ref, hyp) == doctest::Approx(oracle_rouge1(ref, hyp)).epsilon(1e-9));
        CHECK(rougeL(ref, hyp) == doctest::Approx(oracle_rougeL(ref, hyp)).epsilon(1e-9));
        CHECK(b.value >= 0.0);
        CHECK(b.value <= 1.0);
    }
}

TEST_CASE("rouge1 matches hand-computed precision and recall") {
    // overlap 1 of hyp 2 and ref 3: P=1/2, R=1/3, F1=0.4.
    CHECK(rouge1(words({"a", "b", "c"}), words({"a", "d"})) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(rouge1(words({"a", "b"}), words({"a", "b"})) == 1.0);
    CHECK(rouge1(words({"a", "b"}), words({"c", "d"})) == 0.0);
}

TEST_CASE("rougeL matches the longest-common-subsequence F1") {
    // LCS("a b c d", "a c b d") = 3, P=R=3/4, F1=0.75.
    CHECK(rougeL(words({"a", "b", "c", "d"}), words({"a", "c", "b", "d"})) ==
          doctest::Approx(0.75).epsilon(1e-12));
    CHECK(rougeL(words({"a", "b"}), words({"a", "b"})) == 1.0);
    CHECK(rougeL(words({"a", "b"}), {}) == 0.0);
    CHECK(rougeL({}, words({"a"})) == 0.0);
}

TEST_CASE("similarity bundles the three scores consistently") {
    const auto ref = words({"one", "two", "three", "four"});
    const auto hyp = words({"one", "two", "five", "four"});
    const SimilarityScores s = similarity(ref, hyp);
    CHECK(s.bleu == doctest::Approx(bleu(ref, hyp).value).epsilon(1e-12));
    CHECK(s.rouge1 == doctest::Approx(rouge1(ref, hyp)).epsilon(1e-12));
    CHECK(s.rougeL == doctest::Approx(rougeL(ref, hyp)).epsilon(1e-12));
}

TEST_CASE("flip_rate counts only previously caught gold-AI documents") {
    std::map<std::string, Label> before{{"a", Label::Ai}, {"b", Label::Ai}, {"c", Label::Human}};
    std::map<std::string, Label> after{{"a", Label::Human}, {"b", Label::Ai}, {"c", Label::Human}};
    // c is gold-AI but was missed before rewriting, so it never enters n_ai.
    const FlipReport r = flip_rate(before, after, {"a", "b", "c"});
    CHECK(r.n_ai == 2);
    CHECK(r.flips == 1);
    CHECK(r.flip_rate == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("flip_rate is zero when nothing changes") {
    std::map<std::string, Label> before{{"a", Label::Ai}, {"b", Label::Ai}};
    const FlipReport r = flip_rate(before, before, {"a", "b"});
    CHECK(r.flips == 0);
    CHECK(r.flip_rate == 0.0);
}

TEST_CASE("flip_rate of 78 flips over 120 caught documents is exactly 65") {
    std::map<std::string, Label> before, after;
    std::set<std::string> gold;
    for (int i = 0; i < 120; ++i) {
        const std::string id = "ai-" + std::to_string(i);
        gold.insert(id);
        before[id] = Label::Ai;
        after[id] = i < 78 ? Label::Human : Label::Ai;
    }
    const FlipReport r = flip_rate(before, after, gold);
    CHECK(r.n_ai == 120);
    CHECK(r.flips == 78);
    CHECK(r.flip_rate == 65.0);
}

TEST_CASE("flip_rate rejects mismatched id coverage") {
    std::map<std::string, Label> before{{"a", Label::Ai}};
    std::map<std::string, Label> after{{"b", Label::Ai}};
    CHECK_THROWS_AS(flip_rate(before, after, {}), IdMismatchError);
    std::map<std::string, Label> smaller;
    CHECK_THROWS_AS(flip_rate(before, smaller, {}), IdMismatchError);
    CHECK_THROWS_AS(flip_rate(before, before, {"missing"}), IdMismatchError);
}

TEST_CASE("flip_rate matches an independent per-id recount on random label maps") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        std::map<std::string, Label> before, after;
        std::set<std::string> gold;
        const size_t n = 1 + rng.below(30);
        for (size_t i = 0; i < n; ++i) {
            const std::string id = "d" + std::to_string(i);
            before[id] = rng.coin() ? Label::Ai : Label::Human;
            after[id] = rng.coin() ? Label::Ai : Label::Human;
            if (rng.coin()) gold.insert(id);
        }
        long n_ai = 0, flips = 0;
        for (const std::string& id : gold) {
            if (before[id] != Label::Ai) continue;
            ++n_ai;
            if (after[id] == Label::Human) ++flips;
        }
        const FlipReport r = flip_rate(before, after, gold);
        CHECK(r.n_ai == n_ai);
        CHECK(r.flips == flips);
        const double expected = n_ai == 0 ? 0.0 : 100.0 * double(flips) / double(n_ai);
        CHECK(r.flip_rate == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("overlap_sets reports a single model as one intersection") {
    const OverlapReport r = overlap_sets({{"m", {"a", "b", "c"}}});
    REQUIRE(r.intersections.size() == 1);
    CHECK(r.intersections[0].first == std::vector<std::string>{"m"});
    CHECK(r.intersections[0].second == 3);
}

TEST_CASE("overlap_sets partitions two overlapping models into exact subsets") {
    const OverlapReport r = overlap_sets({{"m1", {"a", "b"}}, {"m2", {"b", "c"}}});
    std::map<std::vector<std::string>, long> got(r.intersections.begin(), r.intersections.end());
    CHECK(got.at({"m1"}) == 1);
    CHECK(got.at({"m2"}) == 1);
    CHECK(got.at({"m1", "m2"}) == 1);
    CHECK(got.size() == 3);
}

TEST_CASE("overlap_sets partition property holds on random set families") {
    Rng rng(4242);
    for (int trial = 0; trial < 1000; ++trial) {
        const size_t n_models = 1 + rng.below(5);
        std::map<std::string, std::set<std::string>> flips;
        std::set<std::string> all;
        for (size_t m = 0; m < n_models; ++m) {
            std::set<std::string> ids;
            const size_t n = rng.below(12);
            for (size_t i = 0; i < n; ++i) {
                const std::string id = "d" + std::to_string(rng.below(15));
                ids.insert(id);
                all.insert(id);
            }
            flips["model" + std::to_string(m)] = ids;
        }
        const OverlapReport r = overlap_sets(flips);

        // Exact subsets partition the union.
        long total = 0;
        for (const auto& [subset, count] : r.intersections) {
            CHECK(count > 0);
            total += count;
        }
        CHECK(total == static_cast<long>(all.size()));

        // Marginal per model equals the model's own flip count.
        for (const auto& [name, ids] : flips) {
            long marginal = 0;
            for (const auto& [subset, count] : r.intersections) {
                for (const std::string& member : subset) {
                    if (member == name) {
                        marginal += count;
                        break;
                    }
                }
            }
            CHECK(marginal == static_cast<long>(ids.size()));
        }

        // Brute-force regrouping by membership pattern agrees subset by subset.
        std::map<std::vector<std::string>, long> expected;
        for (const std::string& id : all) {
            std::vector<std::string> pattern;
            for (const auto& [name, ids] : flips) {
                if (ids.count(id)) pattern.push_back(name);
            }
            ++expected[pattern];
        }
        std::map<std::vector<std::string>, long> got(r.intersections.begin(),
                                                     r.intersections.end());
        CHECK(got == expected);
    }
}

TEST_CASE("delta_pp reports percentage-point changes") {
    CHECK(delta_pp(0.81, 0.25) == doctest::Approx(-56.0).epsilon(1e-9));
    CHECK(delta_pp_rounded(0.81, 0.25) == -56);
    CHECK(delta_pp(0.83, 0.64) == doctest::Approx(-19.0).epsilon(1e-9));
    CHECK(delta_pp_rounded(0.83, 0.64) == -19);
    CHECK(delta_pp(0.5, 0.5) == 0.0);
    CHECK(delta_pp_rounded(0.42, 0.42) == 0);
}
