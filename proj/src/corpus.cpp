#include "lyricnet/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lyricnet/rng.hpp"

namespace lyricnet {

bool Song::empty() const {
    for (const auto& seg : segments)
        for (const auto& line : seg)
            if (!line.empty()) return false;
    return true;
}

Vocabulary::Vocabulary() : tokens_{kPadToken, kUnkToken} {
    ids_[kPadToken] = kPadId;
    ids_[kUnkToken] = kUnkId;
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
}

void Vocabulary::add(const std::string& token) {
    if (ids_.count(token)) {
        throw ConfigError("vocabulary: duplicate token '" + token + "'");
    }
    ids_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("vocabulary: cannot write " + path);
    for (const auto& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("vocabulary: cannot read " + path);
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != kPadToken) throw ParseError(path + ":1: expected pad token");
            continue;
        }
        if (lineno == 2) {
            if (line != kUnkToken) throw ParseError(path + ":2: expected unk token");
            continue;
        }
        v.add(line);
    }
    return v;
}

void SplitSpec::validate() const {
    if (train <= 0 || val <= 0 || test <= 0) {
        throw ConfigError("split: fractions must be positive");
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) {
        throw ConfigError("split: fractions must sum to 1");
    }
}

namespace {

bool is_token_char(unsigned char c) {
    return std::isalnum(c) || c == '\'' || c >= 0x80;
}

bool is_blank_line(const std::string& line) {
    for (unsigned char c : line) {
        if (!std::isspace(c)) return false;
    }
    return true;
}

std::vector<std::string> tokenize_line(const std::string& line) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : line) {
        if (is_token_char(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

}  // namespace

TokenizedLyrics tokenize(const std::string& lyrics) {
    TokenizedLyrics segments;
    std::vector<std::vector<std::string>> current;
    std::string line;
    std::istringstream in(lyrics);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank_line(line)) {
            if (!current.empty()) segments.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(tokenize_line(line));
        }
    }
    if (!current.empty()) segments.push_back(std::move(current));
    return segments;
}

std::vector<std::string> flatten_tokens(const TokenizedLyrics& t) {
    std::vector<std::string> out;
    for (const auto& seg : t)
        for (const auto& line : seg)
            for (const auto& tok : line) out.push_back(tok);
    return out;
}

Vocabulary build_vocabulary(const std::vector<RawRecord>& records, std::size_t max_size) {
    if (records.empty()) throw ConfigError("build_vocabulary: empty corpus");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& rec : records) {
        for (const auto& tok : flatten_tokens(tokenize(rec.lyrics))) ++counts[tok];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > max_size) ranked.resize(max_size);
    Vocabulary vocab;
    for (const auto& [tok, count] : ranked) vocab.add(tok);
    return vocab;
}

std::vector<RawRecord> deduplicate(const std::vector<RawRecord>& records, std::uint64_t seed) {
    // group by normalized token sequence; groups keyed in first-occurrence order so
    // the rng consumption order does not depend on hash iteration
    std::unordered_map<std::string, std::size_t> group_of;
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto tokens = flatten_tokens(tokenize(records[i].lyrics));
        std::string key;
        for (const auto& t : tokens) {
            key += t;
            key += ' ';
        }
        auto [it, inserted] = group_of.try_emplace(key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    Rng rng(derive_seed(seed, 0x6465647570ULL));
    std::vector<char> keep(records.size(), 0);
    for (const auto& members : groups) {
        keep[members[rng.next_below(members.size())]] = 1;
    }
    std::vector<RawRecord> out;
    out.reserve(groups.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (keep[i]) out.push_back(records[i]);
    }
    return out;
}

FilterResult filter_genres(const std::vector<RawRecord>& records, const GenreFilter& filter) {
    std::map<std::string, std::size_t> counts;
    for (const auto& rec : records) {
        if (!rec.genre) {
            throw ConfigError("filter_genres: record '" + rec.id + "' carries no genre");
        }
        ++counts[*rec.genre];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> surviving;
    if (filter.mode == GenreFilter::Mode::min_count) {
        for (const auto& [name, count] : ranked) {
            if (count >= filter.threshold) surviving.push_back(name);
        }
    } else {
        for (const auto& [name, count] : ranked) {
            if (surviving.size() >= filter.threshold) break;
            surviving.push_back(name);
        }
    }
    if (surviving.empty()) {
        throw ConfigError("filter_genres: no genre survives the filter");
    }

    std::unordered_map<std::string, int> genre_ids;
    for (std::size_t i = 0; i < surviving.size(); ++i) genre_ids[surviving[i]] = static_cast<int>(i);

    FilterResult result;
    result.genres = surviving;
    for (const auto& rec : records) {
        if (genre_ids.count(*rec.genre)) result.records.push_back(rec);
    }
    return result;
}

SplitResult split(const std::vector<RawRecord>& records, const SplitSpec& spec) {
    spec.validate();
    const std::size_t n = records.size();
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test * static_cast<double>(n)));
    if (n_val == 0 || n_test == 0 || n_val + n_test >= n) {
        throw ConfigError("split: a split would be empty with " + std::to_string(n) + " records");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(spec.seed, 0x73706c6974ULL));
    rng.shuffle(order);

    SplitResult result;
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t i = 0; i < n; ++i) {
        const RawRecord& rec = records[order[i]];
        if (i < n_train) {
            result.train.push_back(rec);
        } else if (i < n_train + n_val) {
            result.val.push_back(rec);
        } else {
            result.test.push_back(rec);
        }
    }
    return result;
}

Song encode_song(const TokenizedLyrics& t, const Vocabulary& vocab, int genre_id) {
    Song song;
    song.genre_id = genre_id;
    for (const auto& seg : t) {
        std::vector<std::vector<int>> lines;
        for (const auto& line : seg) {
            std::vector<int> ids;
            ids.reserve(line.size());
            for (const auto& tok : line) ids.push_back(vocab.id_of(tok));
            lines.push_back(std::move(ids));
        }
        song.segments.push_back(std::move(lines));
    }
    return song;
}

std::vector<RawRecord> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("corpus: cannot read " + path);
    std::vector<RawRecord> records;
    std::unordered_map<std::string, std::size_t> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        RawRecord rec;
        try {
            rec.id = j.at("id").get<std::string>();
            rec.artist = j.value("artist", "");
            rec.title = j.value("title", "");
            rec.lyrics = j.at("lyrics").get<std::string>();
            if (j.contains("genre") && !j["genre"].is_null()) {
                rec.genre = j["genre"].get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        auto [it, inserted] = seen_ids.try_emplace(rec.id, lineno);
        if (!inserted) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": duplicate record id '" +
                             rec.id + "' (first seen at line " + std::to_string(it->second) + ")");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void save_corpus(const std::string& path, const std::vector<RawRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("corpus: cannot write " + path);
    for (const auto& rec : records) {
        nlohmann::json j{{"id", rec.id}, {"artist", rec.artist}, {"title", rec.title}, {"lyrics", rec.lyrics}};
        if (rec.genre) j["genre"] = *rec.genre;
        out << j.dump() << "\n";
    }
}

void save_manifest(const std::string& path, const std::vector<RawRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("manifest: cannot write " + path);
    for (const auto& rec : records) out << rec.id << "\n";
}

std::vector<std::string> load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("manifest: cannot read " + path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

void save_genre_list(const std::string& path, const std::vector<std::string>& genres) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("genres: cannot write " + path);
    for (const auto& g : genres) out << g << "\n";
}

std::vector<std::string> load_genre_list(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("genres: cannot read " + path);
    std::vector<std::string> genres;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) genres.push_back(line);
    }
    return genres;
}

}  // namespace lyricnet
