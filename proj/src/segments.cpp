#include "paat/segments.hpp"

#include <string>

namespace paat {

void SegmentBoundaries::validate() const {
    if (spans.empty()) throw ContractError("segment boundaries: empty");
    std::size_t expect = 0;
    for (const auto& [s, e] : spans) {
        if (s != expect || e <= s) {
            throw ContractError("segment boundaries: span [" + std::to_string(s) + "," +
                                std::to_string(e) + ") breaks coverage at " +
                                std::to_string(expect));
        }
        expect = e;
    }
}

SegmentBoundaries segmentCount(std::size_t tokenCount, std::size_t n) {
    if (tokenCount == 0) throw InputError("segmentTokens: empty token sequence");
    if (n == 0) throw InputError("segmentTokens: requested segment count is zero");
    const std::size_t eff = std::min(n, tokenCount);
    const std::size_t base = tokenCount / eff;
    const std::size_t rem = tokenCount % eff;
    SegmentBoundaries b;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < eff; ++k) {
        const std::size_t len = base + (k < rem ? 1 : 0);
        b.spans.emplace_back(pos, pos + len);
        pos += len;
    }
    return b;
}

SegmentBoundaries segmentTokens(const std::vector<TokenId>& tokens, std::size_t n) {
    return segmentCount(tokens.size(), n);
}

SegmentBoundaries segmentAtHeaders(const std::vector<TokenId>& tokens, TokenId headerId) {
    if (tokens.empty()) throw InputError("segmentAtHeaders: empty token sequence");
    SegmentBoundaries b;
    std::size_t start = 0;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i] == headerId) {
            b.spans.emplace_back(start, i);
            start = i;
        }
    }
    b.spans.emplace_back(start, tokens.size());
    return b;
}

}  // namespace paat
