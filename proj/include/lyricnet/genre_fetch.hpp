#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lyricnet/corpus.hpp"

namespace lyricnet {

// client for any HTTP track-metadata service that answers artist+title queries with JSON
struct FetchConfig {
    std::string base_url;                                   // scheme://host[:port]
    std::string query_template = "/search?term={artist}+{title}";  // {artist}/{title} placeholders
    std::string genre_field = "results.0.primaryGenreName";        // dot path, digits index arrays
    double rate_limit = 10.0;   // requests per second
    int attempts = 3;           // total tries per record on transport/server errors
    int backoff_ms = 200;       // first retry delay, doubled per retry
};

struct FetchSummary {
    std::size_t matched = 0;   // genre filled
    std::size_t unmatched = 0; // service answered but no genre found; record dropped
    std::size_t failed = 0;    // unreachable after retries; record dropped
};

// fills rec.genre from the configured response field; records without a match are dropped
FetchSummary fetch_genre_tags(std::vector<RawRecord>& records, const FetchConfig& config);

// dot-path extraction helper, exposed for tests; returns empty on a missing path
std::string extract_json_field(const std::string& body, const std::string& path);

}  // namespace lyricnet
