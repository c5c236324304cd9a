#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "paat/error.hpp"

namespace paat {

using TokenId = std::int32_t;

// Contiguous, non-overlapping, covering half-open [start, end) ranges
// over token indices. Every segment is non-empty.
struct SegmentBoundaries {
    std::vector<std::pair<std::size_t, std::size_t>> spans;

    std::size_t count() const { return spans.size(); }
    std::size_t tokenCount() const { return spans.empty() ? 0 : spans.back().second; }
    void validate() const;
};

// Splits N tokens into min(n, N) segments whose sizes differ by at most
// one, larger segments first.
SegmentBoundaries segmentTokens(const std::vector<TokenId>& tokens, std::size_t n);
SegmentBoundaries segmentCount(std::size_t tokenCount, std::size_t n);

// Optional mode: split where a reserved section-header token occurs; the
// header token starts a new segment. Falls back to one segment when the
// id never appears past position 0.
SegmentBoundaries segmentAtHeaders(const std::vector<TokenId>& tokens, TokenId headerId);

}  // namespace paat
