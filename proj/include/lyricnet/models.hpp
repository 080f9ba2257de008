#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lyricnet/corpus.hpp"
#include "lyricnet/embeddings.hpp"
#include "lyricnet/layers.hpp"
#include "lyricnet/tape.hpp"

namespace lyricnet {

enum class ModelKind { mc, lr, lstm, hnl, hanl, hans };
enum class Granularity { line, segment };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);  // rejects unknown names

struct ModelConfig {
    ModelKind kind = ModelKind::hanl;
    Granularity granularity = Granularity::line;
    std::size_t max_units = 60;        // lines or segments per song
    std::size_t max_unit_words = 10;   // words per unit
    std::size_t max_song_words = 600;  // flattened length for the lstm
    std::size_t hidden = 50;
    std::size_t attention = 100;
    std::size_t embed_dim = 100;
    std::size_t classes = 0;
    std::size_t vocab_size = 0;
    Real dropout_p = 0.5;
    bool train_embeddings = true;

    // granularity-consistent unit limits: 60 lines x 10 words, or 10 segments x 60 words
    void apply_granularity_defaults();
    void validate() const;
};

// dropout is active only while a context is present (train mode)
struct TrainContext {
    Real dropout_p = 0;
    Rng* rng = nullptr;
};

struct ForwardResult {
    Tensor probs;  // {C}
    int predicted = -1;
    // attention models only
    std::vector<Real> unit_weights;
    std::vector<std::vector<Real>> word_weights;
};

// argmax; ties break toward the lowest class id
int predict(const std::vector<Real>& probs);
int predict(const Tensor& probs);

// units attended by the hierarchical models. At line granularity the units are
// the lines of all segments with an empty separator unit between consecutive
// segments (segment breaks can legitimately attract attention weight); at
// segment granularity each unit is a segment's words flattened. Truncation
// keeps the first max_units units and first max_words words of each unit.
template <class T>
std::vector<std::vector<T>> extract_units_of(const std::vector<std::vector<std::vector<T>>>& segments,
                                             Granularity granularity, std::size_t max_units,
                                             std::size_t max_words) {
    std::vector<std::vector<T>> units;
    if (granularity == Granularity::line) {
        bool first = true;
        for (const auto& seg : segments) {
            if (seg.empty()) continue;
            if (!first) units.emplace_back();  // empty separator unit marks the segment break
            first = false;
            for (const auto& line : seg) units.push_back(line);
        }
    } else {
        for (const auto& seg : segments) {
            std::vector<T> words;
            for (const auto& line : seg) words.insert(words.end(), line.begin(), line.end());
            units.push_back(std::move(words));
        }
    }
    if (units.size() > max_units) units.resize(max_units);
    for (auto& u : units) {
        if (u.size() > max_words) u.resize(max_words);
    }
    return units;
}

std::vector<std::vector<int>> extract_units(const Song& song, Granularity granularity,
                                            std::size_t max_units, std::size_t max_words);

// display-side twin of extract_units, same structure over the token strings
std::vector<std::vector<std::string>> extract_unit_tokens(const TokenizedLyrics& lyrics,
                                                          Granularity granularity,
                                                          std::size_t max_units,
                                                          std::size_t max_words);

// single word sequence for the lstm/lr, truncated to max_words (0 = unlimited)
std::vector<int> flatten_song_ids(const Song& song, std::size_t max_words);

class Classifier {
  public:
    explicit Classifier(ModelConfig cfg) : config_(std::move(cfg)) {}
    virtual ~Classifier() = default;

    const ModelConfig& config() const { return config_; }

    // class scores for one song on the caller's tape; ctx == nullptr means eval mode
    virtual Var build_logits(Tape& tape, const Song& song, TrainContext* ctx) = 0;
    virtual std::vector<Parameter*> parameters() = 0;

    // parameters the optimizer may update; drops the embedding table when frozen
    virtual std::vector<Parameter*> trainable_parameters() { return parameters(); }

    // housekeeping after an optimizer step (PAD embedding row re-zeroing)
    virtual void post_step() {}

    virtual ForwardResult forward(const Song& song);
    virtual int predict_class(const Song& song);

    std::size_t parameter_count();

  protected:
    ModelConfig config_;
};

// predicts the most frequent training-split class for every input
class MajorityClassifier : public Classifier {
  public:
    explicit MajorityClassifier(ModelConfig cfg, int majority_id = -1);

    void fit(const std::vector<Song>& train_songs);
    int majority_id() const { return majority_id_; }

    Var build_logits(Tape& tape, const Song& song, TrainContext* ctx) override;
    std::vector<Parameter*> parameters() override { return {}; }
    ForwardResult forward(const Song& song) override;
    int predict_class(const Song&) override;

  private:
    int majority_id_;
};

// softmax regression on the mean embedding of the song's non-PAD tokens
class MeanEmbeddingClassifier : public Classifier {
  public:
    MeanEmbeddingClassifier(ModelConfig cfg, std::uint64_t seed);
    MeanEmbeddingClassifier(ModelConfig cfg, EmbeddingMatrix embedding, std::uint64_t seed);

    Var build_logits(Tape& tape, const Song& song, TrainContext* ctx) override;
    std::vector<Parameter*> parameters() override;
    std::vector<Parameter*> trainable_parameters() override;
    void post_step() override { embedding_.zero_pad_row(); }

    EmbeddingMatrix& embedding() { return embedding_; }

  private:
    EmbeddingMatrix embedding_;
    Parameter w_out_, b_out_;
};

struct LstmParams {
    Parameter w_i, u_i, b_i;
    Parameter w_f, u_f, b_f;  // forget bias initialized to +1
    Parameter w_o, u_o, b_o;
    Parameter w_c, u_c, b_c;

    LstmParams() = default;
    LstmParams(const std::string& prefix, std::size_t hidden, std::size_t input, Rng& rng);
    std::vector<Parameter*> parameters();
};

struct LstmState {
    Var h;
    Var c;
};

LstmState lstm_step(Tape& tape, LstmParams& p, Var x_t, const LstmState& prev);

// whole song as one word sequence, max-pooled hidden states, softmax head
class SequenceLstmClassifier : public Classifier {
  public:
    SequenceLstmClassifier(ModelConfig cfg, std::uint64_t seed);
    SequenceLstmClassifier(ModelConfig cfg, EmbeddingMatrix embedding, std::uint64_t seed);

    Var build_logits(Tape& tape, const Song& song, TrainContext* ctx) override;
    std::vector<Parameter*> parameters() override;
    std::vector<Parameter*> trainable_parameters() override;
    void post_step() override { embedding_.zero_pad_row(); }

    EmbeddingMatrix& embedding() { return embedding_; }

  private:
    EmbeddingMatrix embedding_;
    LstmParams cell_;
    Parameter w_out_, b_out_;
};

// two-level word/unit network; with attention it is the HAN (line or segment
// granularity), without it each level reduces to a mean over valid positions
class HierarchicalClassifier : public Classifier {
  public:
    HierarchicalClassifier(ModelConfig cfg, std::uint64_t seed);
    HierarchicalClassifier(ModelConfig cfg, EmbeddingMatrix embedding, std::uint64_t seed);

    Var build_logits(Tape& tape, const Song& song, TrainContext* ctx) override;
    std::vector<Parameter*> parameters() override;
    std::vector<Parameter*> trainable_parameters() override;
    void post_step() override { embedding_.zero_pad_row(); }

    ForwardResult forward(const Song& song) override;

    bool uses_attention() const { return use_attention_; }
    EmbeddingMatrix& embedding() { return embedding_; }

  private:
    struct Trace {
        Var logits;
        std::vector<Real> unit_weights;
        std::vector<std::vector<Real>> word_weights;
    };
    Trace build(Tape& tape, const Song& song, TrainContext* ctx, bool want_weights);

    EmbeddingMatrix embedding_;
    GruParams word_fwd_, word_bwd_;
    GruParams unit_fwd_, unit_bwd_;
    AttentionParams word_att_, unit_att_;
    Parameter w_out_, b_out_;
    bool use_attention_ = true;
};

// fresh model with seeded initialization; pretrained embeddings are adopted when given
std::unique_ptr<Classifier> make_classifier(const ModelConfig& config, std::uint64_t seed,
                                            EmbeddingMatrix* pretrained = nullptr);

}  // namespace lyricnet
