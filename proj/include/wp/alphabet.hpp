#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wp {

// Symbols are strings externally and dense indices internally.
// Capped at 16 symbols so count-vector tables stay tractable.
class Alphabet {
  public:
    static constexpr int kMaxSize = 16;

    explicit Alphabet(std::vector<std::string> symbols);

    int size() const { return static_cast<int>(symbols_.size()); }
    const std::string& name(int index) const;
    int index_of(std::string_view symbol) const;  // throws input_error if unknown
    bool contains(std::string_view symbol) const;

    const std::vector<std::string>& symbols() const { return symbols_; }

    bool operator==(const Alphabet& other) const { return symbols_ == other.symbols_; }

  private:
    std::vector<std::string> symbols_;
};

}  // namespace wp
