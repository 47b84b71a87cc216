#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wp/alphabet.hpp"

namespace wp {

enum class RuleKind { kcore, constant, table };

// A symmetric update rule on multisets over the alphabet, stored as a total
// table over capped count vectors in {0..cap}^|Sigma|. Evaluating a multiset
// factors through its capped counts, which makes the rule permutation
// invariant by construction and keeps Poissonization and support enumeration
// finite. Immutable after construction; safe to share across threads.
class UpdateRule {
  public:
    static UpdateRule kcore(int k);
    static UpdateRule constant(Alphabet alphabet, std::string_view symbol);
    // entries: flat table indexed mixed-radix by capped counts (symbol 0 is
    // the fastest-varying digit); entries[i] is the output symbol index.
    static UpdateRule from_table(Alphabet alphabet, int cap, std::vector<std::uint8_t> entries,
                                 RuleKind kind = RuleKind::table);

    static UpdateRule from_spec(const std::string& json_text);
    static UpdateRule load(const std::string& path);

    const Alphabet& alphabet() const { return alphabet_; }
    int cap() const { return cap_; }
    RuleKind kind() const { return kind_; }
    int kcore_k() const { return kcore_k_; }  // 0 unless kind == kcore

    // Uncapped counts allowed; capping happens here.
    int eval_counts(std::span<const std::int64_t> counts) const;

    // Hot path: counts already in {0..cap}.
    int eval_capped(std::span<const int> capped) const {
        std::size_t idx = 0, stride = 1;
        for (int s = 0; s < alphabet_.size(); ++s) {
            idx += static_cast<std::size_t>(capped[s]) * stride;
            stride *= static_cast<std::size_t>(cap_) + 1;
        }
        return table_[idx];
    }

    int eval_empty() const { return table_[0]; }

    std::size_t table_size() const { return table_.size(); }

  private:
    UpdateRule(Alphabet alphabet, int cap, std::vector<std::uint8_t> table, RuleKind kind, int k);

    Alphabet alphabet_;
    int cap_;
    std::vector<std::uint8_t> table_;
    RuleKind kind_;
    int kcore_k_;
};

}  // namespace wp
