#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgec {

// Token <-> dense id mapping. Ids are assigned in first-seen order, so
// loading the same files in the same order always yields the same encoding.
class Vocabulary {
public:
    int intern(const std::string& token) {
        auto it = ids_.find(token);
        if (it != ids_.end()) return it->second;
        int id = static_cast<int>(tokens_.size());
        tokens_.push_back(token);
        ids_.emplace(tokens_.back(), id);
        return id;
    }

    std::optional<int> find(const std::string& token) const {
        auto it = ids_.find(token);
        if (it == ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }

    int size() const { return static_cast<int>(tokens_.size()); }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

} // namespace kgec
