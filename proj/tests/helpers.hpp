#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "lyricnet/corpus.hpp"
#include "lyricnet/models.hpp"
#include "lyricnet/rng.hpp"
#include "lyricnet/tape.hpp"
#include "oracles.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        path_ = fs::temp_directory_path() / ("lyricnet-" + tag + "-" + std::to_string(counter()++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str(const std::string& name = "") const {
        return name.empty() ? path_.string() : (path_ / name).string();
    }

  private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("slurp: cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// ------------------------------------------------------------- random inputs

inline lyricnet::Tensor random_tensor(std::vector<std::size_t> shape, lyricnet::Rng& rng,
                                      double lo = -2.0, double hi = 2.0) {
    lyricnet::Tensor t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<lyricnet::Real>(rng.uniform(lo, hi));
    return t;
}

inline void randomize(lyricnet::Parameter& p, lyricnet::Rng& rng, double lo = -0.5, double hi = 0.5) {
    for (auto& v : p.value.data()) v = static_cast<lyricnet::Real>(rng.uniform(lo, hi));
}

// tiny model configuration used by the gradient checks
inline lyricnet::ModelConfig tiny_config(lyricnet::ModelKind kind) {
    lyricnet::ModelConfig cfg;
    cfg.kind = kind;
    cfg.granularity = kind == lyricnet::ModelKind::hans ? lyricnet::Granularity::segment
                                                        : lyricnet::Granularity::line;
    cfg.vocab_size = 20;
    cfg.embed_dim = 4;
    cfg.hidden = 3;
    cfg.attention = 5;
    cfg.classes = 3;
    cfg.max_units = 6;
    cfg.max_unit_words = 6;
    cfg.max_song_words = 24;
    cfg.dropout_p = lyricnet::Real(0.5);
    return cfg;
}

// small random songs over the tiny vocabulary
inline lyricnet::Song random_song(lyricnet::Rng& rng, std::size_t vocab, std::size_t classes) {
    lyricnet::Song song;
    const std::size_t n_segs = 1 + rng.next_below(2);
    for (std::size_t s = 0; s < n_segs; ++s) {
        std::vector<std::vector<int>> lines;
        const std::size_t n_lines = 1 + rng.next_below(3);
        for (std::size_t l = 0; l < n_lines; ++l) {
            std::vector<int> ids;
            const std::size_t n_words = 1 + rng.next_below(4);
            for (std::size_t w = 0; w < n_words; ++w) {
                ids.push_back(static_cast<int>(2 + rng.next_below(vocab - 2)));
            }
            lines.push_back(std::move(ids));
        }
        song.segments.push_back(std::move(lines));
    }
    song.genre_id = static_cast<int>(rng.next_below(classes));
    return song;
}

// central finite differences of the batch cross-entropy loss for every parameter;
// returns the worst relative error across all entries
double fd_worst_rel_error(lyricnet::Classifier& model, const std::vector<lyricnet::Song>& songs,
                          double step = 1e-5);

inline double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    return std::abs(analytic - numeric) / denom;
}

// ---------------------------------------------------- parameter access by name

inline lyricnet::Parameter* param_by_name(lyricnet::Classifier& model, const std::string& name) {
    for (lyricnet::Parameter* p : model.parameters()) {
        if (p->name == name) return p;
    }
    return nullptr;
}

inline oracle::Mat as_mat(const lyricnet::Tensor& t) {
    oracle::Mat m(t.rows(), oracle::Vec(t.cols()));
    for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = static_cast<double>(t.at(r, c));
    return m;
}

inline oracle::Vec as_vec(const lyricnet::Tensor& t) {
    oracle::Vec v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<double>(t[i]);
    return v;
}

inline oracle::GruWeights gru_weights(lyricnet::GruParams& p) {
    return {as_mat(p.w_z.value), as_mat(p.u_z.value), as_vec(p.b_z.value),
            as_mat(p.w_r.value), as_mat(p.u_r.value), as_vec(p.b_r.value),
            as_mat(p.w_h.value), as_mat(p.u_h.value), as_vec(p.b_h.value)};
}

inline oracle::AttentionWeights attention_weights(lyricnet::AttentionParams& p) {
    return {as_mat(p.w_a.value), as_vec(p.b_a.value), as_vec(p.u_a.value)};
}

// -------------------------------------------------------- synthetic corpora

struct SyntheticSpec {
    std::size_t songs = 2000;
    std::size_t genres = 10;
    std::size_t genre_words = 50;     // disjoint per genre
    std::size_t filler_words = 100;   // shared across genres
    // 30% filler overall, but bursty per song: a song is either mostly clean or
    // heavily diluted, which is what separates attention from mean-pooling
    double filler_low = 0.05;
    double filler_high = 0.55;
    double filler_fraction = 0.3;     // corpus-level target, sets the low/high mix
    std::size_t min_lines = 4, max_lines = 8;
    std::size_t min_words = 4, max_words = 7;
    std::uint64_t seed = 7;
};

// json-lines corpus where each genre draws from its own vocabulary plus shared filler
std::vector<lyricnet::RawRecord> make_synthetic_corpus(const SyntheticSpec& spec);

inline void write_corpus_file(const std::string& path, const std::vector<lyricnet::RawRecord>& recs) {
    lyricnet::save_corpus(path, recs);
}

}  // namespace testutil
