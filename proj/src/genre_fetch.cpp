#include "lyricnet/genre_fetch.hpp"

#include <chrono>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace lyricnet {

namespace {

std::string url_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else if (c == ' ') {
            out += '+';
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        }
    }
    return out;
}

std::string expand_template(const std::string& tpl, const RawRecord& rec) {
    std::string out;
    for (std::size_t i = 0; i < tpl.size();) {
        if (tpl.compare(i, 8, "{artist}") == 0) {
            out += url_encode(rec.artist);
            i += 8;
        } else if (tpl.compare(i, 7, "{title}") == 0) {
            out += url_encode(rec.title);
            i += 7;
        } else {
            out += tpl[i++];
        }
    }
    return out;
}

// spaces requests k/rate seconds from the start, counting the k-th request as k=1
class RateLimiter {
  public:
    explicit RateLimiter(double per_second)
        : interval_(per_second > 0 ? 1.0 / per_second : 0.0), start_(std::chrono::steady_clock::now()) {}

    void acquire() {
        ++issued_;
        if (interval_ <= 0) return;
        const auto due = start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(interval_ * static_cast<double>(issued_)));
        std::this_thread::sleep_until(due);
    }

  private:
    double interval_;
    std::chrono::steady_clock::time_point start_;
    std::uint64_t issued_ = 0;
};

}  // namespace

std::string extract_json_field(const std::string& body, const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        return "";
    }
    const nlohmann::json* cur = &j;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (!key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char c) { return std::isdigit(c); })) {
            const std::size_t idx = std::stoul(key);
            if (!cur->is_array() || idx >= cur->size()) return "";
            cur = &(*cur)[idx];
        } else {
            if (!cur->is_object() || !cur->contains(key)) return "";
            cur = &(*cur)[key];
        }
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    if (cur->is_string()) return cur->get<std::string>();
    return "";
}

FetchSummary fetch_genre_tags(std::vector<RawRecord>& records, const FetchConfig& config) {
    httplib::Client client(config.base_url);
    client.set_connection_timeout(10);
    client.set_read_timeout(10);
    RateLimiter limiter(config.rate_limit);
    FetchSummary summary;

    std::vector<RawRecord> kept;
    kept.reserve(records.size());
    for (auto& rec : records) {
        const std::string query = expand_template(config.query_template, rec);
        bool answered = false;
        std::string genre;
        int delay_ms = config.backoff_ms;
        for (int attempt = 0; attempt < config.attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
            limiter.acquire();
            auto res = client.Get(query);
            if (!res || res->status >= 500) continue;  // transport or server error, retry
            answered = true;
            if (res->status == 200) genre = extract_json_field(res->body, config.genre_field);
            break;  // 4xx or missing field means a definitive no-match
        }
        if (!answered) {
            ++summary.failed;
        } else if (genre.empty()) {
            ++summary.unmatched;
        } else {
            rec.genre = genre;
            kept.push_back(rec);
            ++summary.matched;
        }
    }
    records = std::move(kept);

    if (summary.failed > 0 || summary.unmatched > 0) {
        std::cerr << "fetch-genres: " << summary.matched << " matched, " << summary.unmatched
                  << " without genre, " << summary.failed << " unreachable after "
                  << config.attempts << " attempts\n";
    }
    return summary;
}

}  // namespace lyricnet
