#include <doctest.h>

#include <algorithm>
#include <random>

#include "wp/errors.hpp"
#include "wp/rng.hpp"
#include "wp/rule.hpp"

using namespace wp;

namespace {

std::int64_t count_of(const std::vector<int>& multiset, int symbol) {
    return std::count(multiset.begin(), multiset.end(), symbol);
}

int eval_multiset(const UpdateRule& rule, const std::vector<int>& multiset) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(rule.alphabet().size()), 0);
    for (int s : multiset) ++counts[static_cast<std::size_t>(s)];
    return rule.eval_counts(counts);
}

}  // namespace

TEST_CASE("kcore rule evaluation") {
    const UpdateRule k3 = UpdateRule::kcore(3);
    CHECK(k3.cap() == 2);
    CHECK(k3.alphabet().size() == 2);

    // two ones >= k-1=2 -> "1"
    std::vector<std::int64_t> counts{1, 2};
    CHECK(k3.eval_counts(counts) == 1);
    // empty multiset has zero ones -> "0"
    counts = {0, 0};
    CHECK(k3.eval_counts(counts) == 0);

    const UpdateRule k2 = UpdateRule::kcore(2);
    CHECK(k2.cap() == 1);
    counts = {0, 1};
    CHECK(k2.eval_counts(counts) == 1);
    counts = {5, 0};
    CHECK(k2.eval_counts(counts) == 0);
}

TEST_CASE("constant rule ignores inputs") {
    const UpdateRule rule = UpdateRule::constant(Alphabet({"a", "b"}), "a");
    CHECK(rule.cap() == 0);
    std::vector<std::int64_t> counts{0, 7};
    CHECK(rule.eval_counts(counts) == 0);
    counts = {3, 0};
    CHECK(rule.eval_counts(counts) == 0);
}

TEST_CASE("rule spec documents") {
    const UpdateRule k2 = UpdateRule::from_spec(R"({"kind":"kcore","k":2})");
    CHECK(k2.cap() == 1);
    CHECK(k2.kcore_k() == 2);
    std::vector<std::int64_t> counts{0, 1};
    CHECK(k2.eval_counts(counts) == 1);

    const UpdateRule c = UpdateRule::from_spec(
        R"({"kind":"constant","alphabet":["x","y"],"symbol":"x"})");
    counts = {0, 9};
    CHECK(c.eval_counts(counts) == 0);

    CHECK_THROWS_AS(UpdateRule::from_spec(R"({"kind":"kcore","k":1})"), validation_error);
    CHECK_THROWS_AS(UpdateRule::from_spec(R"({"kind":"nope"})"), validation_error);
    CHECK_THROWS_AS(UpdateRule::from_spec("not json"), validation_error);

    // Partial table rejected.
    CHECK_THROWS_AS(UpdateRule::from_spec(R"({
        "kind":"table","alphabet":["a","b"],"cap":1,
        "table":[
          {"counts":[0,0],"out":"a"},
          {"counts":[1,0],"out":"b"},
          {"counts":[0,1],"out":"a"}
        ]})"),
                    validation_error);

    const UpdateRule parity = UpdateRule::from_spec(R"({
        "kind":"table","alphabet":["a","b"],"cap":1,
        "table":[
          {"counts":[0,0],"out":"a"},
          {"counts":[1,0],"out":"b"},
          {"counts":[0,1],"out":"a"},
          {"counts":[1,1],"out":"b"}
        ]})");
    counts = {1, 1};
    CHECK(parity.eval_counts(counts) == 1);
}

TEST_CASE("alphabet validation") {
    CHECK_THROWS_AS(Alphabet({}), validation_error);
    CHECK_THROWS_AS(Alphabet({"a", "a"}), validation_error);
    CHECK_THROWS_AS(Alphabet({""}), validation_error);
    CHECK_THROWS_AS(Alphabet({"a,b"}), validation_error);
    const Alphabet ab({"0", "1"});
    CHECK(ab.index_of("1") == 1);
    CHECK_THROWS_AS(ab.index_of("2"), input_error);
}

TEST_CASE("permutation invariance via random shuffles") {
    const UpdateRule rule = UpdateRule::kcore(3);
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> multiset;
        const int len = static_cast<int>(rng.below(9));
        for (int i = 0; i < len; ++i) multiset.push_back(static_cast<int>(rng.below(2)));
        const int base = eval_multiset(rule, multiset);
        for (int rep = 0; rep < 5; ++rep) {
            rng.shuffle(multiset);
            CHECK(eval_multiset(rule, multiset) == base);
        }
    }
}

TEST_CASE("cap consistency: raising counts beyond the cap never matters") {
    const UpdateRule rule = UpdateRule::kcore(3);
    const int cap = rule.cap();
    for (int zeros = 0; zeros <= cap; ++zeros) {
        for (int ones = 0; ones <= cap; ++ones) {
            std::vector<std::int64_t> counts{zeros, ones};
            const int base = rule.eval_counts(counts);
            for (int extra = 1; extra <= 3; ++extra) {
                if (zeros == cap) {
                    counts = {zeros + extra, ones};
                    CHECK(rule.eval_counts(counts) == base);
                }
                if (ones == cap) {
                    counts = {zeros, ones + extra};
                    CHECK(rule.eval_counts(counts) == base);
                }
            }
        }
    }
}

TEST_CASE("kcore monotonicity in added messages") {
    const UpdateRule rule = UpdateRule::kcore(3);
    for (int zeros = 0; zeros <= 4; ++zeros) {
        for (int ones = 0; ones <= 4; ++ones) {
            std::vector<std::int64_t> counts{zeros, ones};
            const int base = rule.eval_counts(counts);
            counts = {zeros, ones + 1};
            if (base == 1) CHECK(rule.eval_counts(counts) == 1);  // adding a one never drops it
            counts = {zeros + 1, ones};
            if (base == 0) CHECK(rule.eval_counts(counts) == 0);  // adding a zero never raises it
        }
    }
}
