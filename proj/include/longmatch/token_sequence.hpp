#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace longmatch {

/// Model input: [CLS] side-a tokens [SEP] side-b tokens [SEP].
struct TokenSequence {
    std::vector<std::int32_t> ids;
    std::vector<bool> protected_mask;  // true for CLS and SEP positions

    std::size_t size() const { return ids.size(); }
    std::size_t protected_count() const {
        std::size_t n = 0;
        for (bool p : protected_mask) n += p ? 1 : 0;
        return n;
    }
};

}  // namespace longmatch
