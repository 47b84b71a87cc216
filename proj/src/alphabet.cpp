#include "wp/alphabet.hpp"

#include <unordered_set>

#include "wp/errors.hpp"

namespace wp {

Alphabet::Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw validation_error("alphabet must be nonempty");
    if (static_cast<int>(symbols_.size()) > kMaxSize)
        throw validation_error("alphabet larger than " + std::to_string(kMaxSize) + " symbols");
    std::unordered_set<std::string> seen;
    for (const auto& s : symbols_) {
        if (s.empty()) throw validation_error("empty symbol name");
        // Names appear in comma-separated story dumps, so keep them clean.
        if (s.find_first_of(", \t\n") != std::string::npos)
            throw validation_error("symbol name contains separator character: '" + s + "'");
        if (!seen.insert(s).second) throw validation_error("duplicate symbol: '" + s + "'");
    }
}

const std::string& Alphabet::name(int index) const {
    if (index < 0 || index >= size()) throw input_error("symbol index out of range");
    return symbols_[static_cast<std::size_t>(index)];
}

int Alphabet::index_of(std::string_view symbol) const {
    for (int i = 0; i < size(); ++i) {
        if (symbols_[static_cast<std::size_t>(i)] == symbol) return i;
    }
    throw input_error("unknown symbol: '" + std::string(symbol) + "'");
}

bool Alphabet::contains(std::string_view symbol) const {
    for (const auto& s : symbols_) {
        if (s == symbol) return true;
    }
    return false;
}

}  // namespace wp
