#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyricnet/errors.hpp"

namespace lyricnet {

// one corpus entry as read from the JSON-lines file
struct RawRecord {
    std::string id;
    std::string artist;
    std::string title;
    std::string lyrics;  // lines separated by newline, segments by blank line
    std::optional<std::string> genre;
};

// segment -> line -> token id
using TokenizedLyrics = std::vector<std::vector<std::vector<std::string>>>;

struct Song {
    std::vector<std::vector<std::vector<int>>> segments;
    int genre_id = -1;

    bool empty() const;
};

class Vocabulary {
  public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr const char* kPadToken = "<pad>";
    static constexpr const char* kUnkToken = "<unk>";

    Vocabulary();

    // returns the id of a known token, kUnkId otherwise
    int id_of(const std::string& token) const;
    const std::string& token_of(int id) const { return tokens_[static_cast<std::size_t>(id)]; }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    // corpus tokens only; reserved entries are fixed by the constructor
    void add(const std::string& token);

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

struct SplitSpec {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
    std::uint64_t seed = 0;

    void validate() const;  // positive fractions summing to 1 +- 1e-9
};

struct SplitResult {
    std::vector<RawRecord> train;
    std::vector<RawRecord> val;
    std::vector<RawRecord> test;
};

struct GenreFilter {
    enum class Mode { min_count, top_n };
    Mode mode = Mode::min_count;
    std::size_t threshold = 50;  // k for min_count, n for top_n
};

struct FilterResult {
    std::vector<RawRecord> records;
    std::vector<std::string> genres;  // index = genre id, descending frequency then lexicographic
};

// lowercased maximal runs of letters/digits/apostrophes; blank lines split segments.
// Bytes >= 0x80 are treated as letters so UTF-8 sequences survive intact.
TokenizedLyrics tokenize(const std::string& lyrics);

// flattened token sequence, used as the dedup key and in vocabulary counting
std::vector<std::string> flatten_tokens(const TokenizedLyrics& t);

// top max_size tokens by frequency, ties broken lexicographically
Vocabulary build_vocabulary(const std::vector<RawRecord>& records, std::size_t max_size);

// one record per distinct normalized token sequence, representative chosen by seeded rng;
// output keeps the input order of the surviving records
std::vector<RawRecord> deduplicate(const std::vector<RawRecord>& records, std::uint64_t seed);

FilterResult filter_genres(const std::vector<RawRecord>& records, const GenreFilter& filter);

// seeded shuffle then contiguous partition; val/test get floor(fraction*n), train the rest
SplitResult split(const std::vector<RawRecord>& records, const SplitSpec& spec);

// token ids, unknown words -> UNK; genre_id resolved by caller
Song encode_song(const TokenizedLyrics& t, const Vocabulary& vocab, int genre_id);

// JSON-lines corpus file, one RawRecord per line
std::vector<RawRecord> load_corpus(const std::string& path);
void save_corpus(const std::string& path, const std::vector<RawRecord>& records);

// manifests: one record id per line
void save_manifest(const std::string& path, const std::vector<RawRecord>& records);
std::vector<std::string> load_manifest(const std::string& path);

void save_genre_list(const std::string& path, const std::vector<std::string>& genres);
std::vector<std::string> load_genre_list(const std::string& path);

}  // namespace lyricnet
