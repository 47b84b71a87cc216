#include "wp/rule.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wp/errors.hpp"

namespace wp {

UpdateRule::UpdateRule(Alphabet alphabet, int cap, std::vector<std::uint8_t> table, RuleKind kind,
                       int k)
    : alphabet_(std::move(alphabet)), cap_(cap), table_(std::move(table)), kind_(kind), kcore_k_(k) {}

UpdateRule UpdateRule::kcore(int k) {
    if (k < 2) throw validation_error("kcore rule requires k >= 2");
    Alphabet ab({"0", "1"});
    const int cap = k - 1;
    // Output "1" iff the capped count of incoming "1" messages reaches k-1.
    std::vector<std::uint8_t> table(static_cast<std::size_t>(cap + 1) * (cap + 1));
    for (int zeros = 0; zeros <= cap; ++zeros) {
        for (int ones = 0; ones <= cap; ++ones) {
            table[static_cast<std::size_t>(zeros) + static_cast<std::size_t>(ones) * (cap + 1)] =
                (ones == cap) ? 1 : 0;
        }
    }
    return UpdateRule(std::move(ab), cap, std::move(table), RuleKind::kcore, k);
}

UpdateRule UpdateRule::constant(Alphabet alphabet, std::string_view symbol) {
    const int out = alphabet.index_of(symbol);
    return UpdateRule(std::move(alphabet), 0, {static_cast<std::uint8_t>(out)}, RuleKind::constant,
                      0);
}

UpdateRule UpdateRule::from_table(Alphabet alphabet, int cap, std::vector<std::uint8_t> entries,
                                  RuleKind kind) {
    if (cap < 0) throw validation_error("cap must be nonnegative");
    std::size_t expected = 1;
    for (int s = 0; s < alphabet.size(); ++s) expected *= static_cast<std::size_t>(cap) + 1;
    if (entries.size() != expected)
        throw validation_error("table has " + std::to_string(entries.size()) + " entries, needs " +
                               std::to_string(expected));
    for (std::uint8_t e : entries) {
        if (e >= alphabet.size()) throw validation_error("table output index out of range");
    }
    return UpdateRule(std::move(alphabet), cap, std::move(entries), kind, 0);
}

int UpdateRule::eval_counts(std::span<const std::int64_t> counts) const {
    if (static_cast<int>(counts.size()) != alphabet_.size())
        throw input_error("count vector size does not match alphabet");
    std::size_t idx = 0, stride = 1;
    for (int s = 0; s < alphabet_.size(); ++s) {
        const std::int64_t c = counts[static_cast<std::size_t>(s)];
        if (c < 0) throw input_error("negative count");
        idx += static_cast<std::size_t>(std::min<std::int64_t>(c, cap_)) * stride;
        stride *= static_cast<std::size_t>(cap_) + 1;
    }
    return table_[idx];
}

namespace {

using nlohmann::json;

UpdateRule parse_spec(const json& doc) {
    if (!doc.is_object()) throw validation_error("rule spec must be a single object");
    if (!doc.contains("kind")) throw validation_error("rule spec missing 'kind'");
    const std::string kind = doc.at("kind").get<std::string>();

    if (kind == "kcore") {
        if (!doc.contains("k")) throw validation_error("kcore spec missing 'k'");
        if (doc.contains("alphabet")) {
            const auto ab = doc.at("alphabet").get<std::vector<std::string>>();
            if (ab != std::vector<std::string>{"0", "1"})
                throw validation_error("kcore rules use the fixed alphabet [\"0\",\"1\"]");
        }
        return UpdateRule::kcore(doc.at("k").get<int>());
    }

    if (!doc.contains("alphabet")) throw validation_error("rule spec missing 'alphabet'");
    Alphabet alphabet(doc.at("alphabet").get<std::vector<std::string>>());

    if (kind == "constant") {
        if (!doc.contains("symbol")) throw validation_error("constant spec missing 'symbol'");
        return UpdateRule::constant(std::move(alphabet), doc.at("symbol").get<std::string>());
    }

    if (kind == "table") {
        if (!doc.contains("cap")) throw validation_error("table spec missing 'cap'");
        const int cap = doc.at("cap").get<int>();
        if (cap < 0) throw validation_error("cap must be nonnegative");
        if (!doc.contains("table")) throw validation_error("table spec missing 'table'");

        std::size_t expected = 1;
        for (int s = 0; s < alphabet.size(); ++s) expected *= static_cast<std::size_t>(cap) + 1;
        std::vector<std::uint8_t> entries(expected, 0);
        std::vector<bool> filled(expected, false);

        for (const auto& row : doc.at("table")) {
            const auto counts = row.at("counts").get<std::vector<int>>();
            if (static_cast<int>(counts.size()) != alphabet.size())
                throw validation_error("table row count vector does not match alphabet size");
            std::size_t idx = 0, stride = 1;
            for (int s = 0; s < alphabet.size(); ++s) {
                const int c = counts[static_cast<std::size_t>(s)];
                if (c < 0 || c > cap)
                    throw validation_error("table row count outside {0.." + std::to_string(cap) +
                                           "}");
                idx += static_cast<std::size_t>(c) * stride;
                stride *= static_cast<std::size_t>(cap) + 1;
            }
            if (filled[idx]) throw validation_error("duplicate table row");
            filled[idx] = true;
            entries[idx] =
                static_cast<std::uint8_t>(alphabet.index_of(row.at("out").get<std::string>()));
        }
        const std::size_t missing =
            static_cast<std::size_t>(std::count(filled.begin(), filled.end(), false));
        if (missing > 0)
            throw validation_error("table is partial: " + std::to_string(missing) +
                                   " count vectors missing");
        return UpdateRule::from_table(std::move(alphabet), cap, std::move(entries));
    }

    throw validation_error("unknown rule kind: '" + kind + "'");
}

}  // namespace

UpdateRule UpdateRule::from_spec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw validation_error(std::string("rule spec is not valid JSON: ") + e.what());
    }
    try {
        return parse_spec(doc);
    } catch (const json::exception& e) {
        throw validation_error(std::string("malformed rule spec: ") + e.what());
    }
}

UpdateRule UpdateRule::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open rule file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_spec(buf.str());
}

}  // namespace wp
