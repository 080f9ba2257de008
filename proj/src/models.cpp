#include "lyricnet/models.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace lyricnet {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::mc: return "mc";
        case ModelKind::lr: return "lr";
        case ModelKind::lstm: return "lstm";
        case ModelKind::hnl: return "hn-l";
        case ModelKind::hanl: return "han-l";
        case ModelKind::hans: return "han-s";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& s) {
    if (s == "mc") return ModelKind::mc;
    if (s == "lr") return ModelKind::lr;
    if (s == "lstm") return ModelKind::lstm;
    if (s == "hn-l") return ModelKind::hnl;
    if (s == "han-l") return ModelKind::hanl;
    if (s == "han-s") return ModelKind::hans;
    throw ConfigError("unknown model type '" + s + "' (expected mc|lr|lstm|hn-l|han-l|han-s)");
}

void ModelConfig::apply_granularity_defaults() {
    if (kind == ModelKind::hans) granularity = Granularity::segment;
    if (granularity == Granularity::segment) {
        max_units = 10;
        max_unit_words = 60;
    } else {
        max_units = 60;
        max_unit_words = 10;
    }
}

void ModelConfig::validate() const {
    if (classes == 0) throw ConfigError("model config: class count must be positive");
    if (kind == ModelKind::mc) return;
    if (vocab_size < 2 || embed_dim == 0) throw ConfigError("model config: bad embedding sizes");
    if (kind == ModelKind::lr) return;
    if (hidden == 0) throw ConfigError("model config: hidden size must be positive");
    if (kind == ModelKind::lstm) {
        if (max_song_words == 0) throw ConfigError("model config: max song words must be positive");
        return;
    }
    if (max_units == 0 || max_unit_words == 0) {
        throw ConfigError("model config: unit limits must be positive");
    }
    if ((kind == ModelKind::hanl || kind == ModelKind::hans) && attention == 0) {
        throw ConfigError("model config: attention size must be positive");
    }
}

int predict(const std::vector<Real>& probs) {
    if (probs.empty()) throw DimensionError("predict: empty probability vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return static_cast<int>(best);
}

int predict(const Tensor& probs) { return predict(probs.data()); }

std::vector<std::vector<int>> extract_units(const Song& song, Granularity granularity,
                                            std::size_t max_units, std::size_t max_words) {
    return extract_units_of(song.segments, granularity, max_units, max_words);
}

std::vector<std::vector<std::string>> extract_unit_tokens(const TokenizedLyrics& lyrics,
                                                          Granularity granularity,
                                                          std::size_t max_units,
                                                          std::size_t max_words) {
    return extract_units_of(lyrics, granularity, max_units, max_words);
}

std::vector<int> flatten_song_ids(const Song& song, std::size_t max_words) {
    std::vector<int> ids;
    for (const auto& seg : song.segments)
        for (const auto& line : seg)
            for (int id : line) {
                if (max_words != 0 && ids.size() >= max_words) return ids;
                ids.push_back(id);
            }
    return ids;
}

namespace {

std::vector<int> non_pad_ids(const std::vector<int>& ids) {
    std::vector<int> out;
    for (int id : ids) {
        if (id != Vocabulary::kPadId) out.push_back(id);
    }
    return out;
}

Mask word_mask(const std::vector<int>& ids) {
    Mask m;
    m.valid.resize(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) m.valid[i] = ids[i] != Vocabulary::kPadId;
    return m;
}

Var maybe_dropout(Tape& t, Var x, TrainContext* ctx) {
    if (ctx != nullptr && ctx->dropout_p > Real(0)) return t.dropout(x, ctx->dropout_p, *ctx->rng);
    return x;
}

Rng model_rng(std::uint64_t seed) { return Rng(derive_seed(seed, 0x6d646cULL)); }

std::vector<Real> to_vector(const Tensor& t) { return t.data(); }

}  // namespace

std::size_t Classifier::parameter_count() {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += p->size();
    return n;
}

ForwardResult Classifier::forward(const Song& song) {
    Tape tape;
    Var logits = build_logits(tape, song, nullptr);
    Var probs = tape.softmax(logits);
    ForwardResult res;
    res.probs = probs.value();
    res.predicted = predict(res.probs);
    return res;
}

int Classifier::predict_class(const Song& song) { return forward(song).predicted; }

// ---------------------------------------------------------------- majority

MajorityClassifier::MajorityClassifier(ModelConfig cfg, int majority_id)
    : Classifier(std::move(cfg)), majority_id_(majority_id) {}

void MajorityClassifier::fit(const std::vector<Song>& train_songs) {
    if (train_songs.empty()) throw ConfigError("mc: empty training split");
    std::vector<std::size_t> counts(config_.classes, 0);
    for (const Song& s : train_songs) {
        if (s.genre_id < 0 || static_cast<std::size_t>(s.genre_id) >= config_.classes) {
            throw ConfigError("mc: genre id " + std::to_string(s.genre_id) + " out of range");
        }
        ++counts[static_cast<std::size_t>(s.genre_id)];
    }
    // most frequent class, ties to the lowest id
    majority_id_ = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Var MajorityClassifier::build_logits(Tape&, const Song&, TrainContext*) {
    throw ConfigError("mc: not gradient-trainable");
}

ForwardResult MajorityClassifier::forward(const Song&) {
    if (majority_id_ < 0) throw ConfigError("mc: not fitted");
    ForwardResult res;
    res.probs = Tensor({config_.classes});
    res.probs[static_cast<std::size_t>(majority_id_)] = Real(1);
    res.predicted = majority_id_;
    return res;
}

int MajorityClassifier::predict_class(const Song&) {
    if (majority_id_ < 0) throw ConfigError("mc: not fitted");
    return majority_id_;
}

// ---------------------------------------------------------------- lr

MeanEmbeddingClassifier::MeanEmbeddingClassifier(ModelConfig cfg, std::uint64_t seed)
    : MeanEmbeddingClassifier(std::move(cfg), EmbeddingMatrix{}, seed) {
    embedding_ = init_embeddings(config_.vocab_size, config_.embed_dim, seed);
    embedding_.trainable = config_.train_embeddings;
}

MeanEmbeddingClassifier::MeanEmbeddingClassifier(ModelConfig cfg, EmbeddingMatrix embedding,
                                                 std::uint64_t seed)
    : Classifier(std::move(cfg)), embedding_(std::move(embedding)) {
    config_.validate();
    Rng rng = model_rng(seed);
    w_out_ = Parameter("out.w", init_weight_matrix(config_.classes, config_.embed_dim, rng));
    b_out_ = Parameter("out.b", Tensor({config_.classes}));
    embedding_.trainable = config_.train_embeddings;
}

Var MeanEmbeddingClassifier::build_logits(Tape& t, const Song& song, TrainContext* ctx) {
    if (song.empty()) throw ConfigError("lr: empty song");
    const std::vector<int> ids = non_pad_ids(flatten_song_ids(song, 0));
    Var v;
    if (ids.empty()) {
        // every token is padding; fall back to a zero input vector
        v = t.constant(Tensor({config_.embed_dim}));
    } else {
        Var rows = maybe_dropout(t, embedding_.lookup(t, ids), ctx);
        std::vector<std::size_t> all(ids.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        v = t.mean_rows(rows, all);
    }
    v = maybe_dropout(t, v, ctx);
    return matvec(t.param(w_out_), v) + t.param(b_out_);
}

std::vector<Parameter*> MeanEmbeddingClassifier::parameters() {
    return {&embedding_.table, &w_out_, &b_out_};
}

std::vector<Parameter*> MeanEmbeddingClassifier::trainable_parameters() {
    if (embedding_.trainable) return parameters();
    return {&w_out_, &b_out_};
}

// ---------------------------------------------------------------- lstm

LstmParams::LstmParams(const std::string& prefix, std::size_t hidden, std::size_t input, Rng& rng)
    : w_i(prefix + ".w_i", init_weight_matrix(hidden, input, rng)),
      u_i(prefix + ".u_i", init_weight_matrix(hidden, hidden, rng)),
      b_i(prefix + ".b_i", Tensor({hidden})),
      w_f(prefix + ".w_f", init_weight_matrix(hidden, input, rng)),
      u_f(prefix + ".u_f", init_weight_matrix(hidden, hidden, rng)),
      b_f(prefix + ".b_f", Tensor({hidden})),
      w_o(prefix + ".w_o", init_weight_matrix(hidden, input, rng)),
      u_o(prefix + ".u_o", init_weight_matrix(hidden, hidden, rng)),
      b_o(prefix + ".b_o", Tensor({hidden})),
      w_c(prefix + ".w_c", init_weight_matrix(hidden, input, rng)),
      u_c(prefix + ".u_c", init_weight_matrix(hidden, hidden, rng)),
      b_c(prefix + ".b_c", Tensor({hidden})) {
    b_f.value.fill(Real(1));  // open forget gates at the start of training
}

std::vector<Parameter*> LstmParams::parameters() {
    return {&w_i, &u_i, &b_i, &w_f, &u_f, &b_f, &w_o, &u_o, &b_o, &w_c, &u_c, &b_c};
}

LstmState lstm_step(Tape& t, LstmParams& p, Var x_t, const LstmState& prev) {
    Var i = t.sigmoid(matvec(t.param(p.w_i), x_t) + matvec(t.param(p.u_i), prev.h) + t.param(p.b_i));
    Var f = t.sigmoid(matvec(t.param(p.w_f), x_t) + matvec(t.param(p.u_f), prev.h) + t.param(p.b_f));
    Var o = t.sigmoid(matvec(t.param(p.w_o), x_t) + matvec(t.param(p.u_o), prev.h) + t.param(p.b_o));
    Var c_cand = t.tanh(matvec(t.param(p.w_c), x_t) + matvec(t.param(p.u_c), prev.h) + t.param(p.b_c));
    Var c = hadamard(f, prev.c) + hadamard(i, c_cand);
    Var h = hadamard(o, t.tanh(c));
    return {h, c};
}

SequenceLstmClassifier::SequenceLstmClassifier(ModelConfig cfg, std::uint64_t seed)
    : SequenceLstmClassifier(std::move(cfg), EmbeddingMatrix{}, seed) {
    embedding_ = init_embeddings(config_.vocab_size, config_.embed_dim, seed);
    embedding_.trainable = config_.train_embeddings;
}

SequenceLstmClassifier::SequenceLstmClassifier(ModelConfig cfg, EmbeddingMatrix embedding,
                                               std::uint64_t seed)
    : Classifier(std::move(cfg)), embedding_(std::move(embedding)) {
    config_.validate();
    Rng rng = model_rng(seed);
    cell_ = LstmParams("lstm", config_.hidden, config_.embed_dim, rng);
    w_out_ = Parameter("out.w", init_weight_matrix(config_.classes, config_.hidden, rng));
    b_out_ = Parameter("out.b", Tensor({config_.classes}));
    embedding_.trainable = config_.train_embeddings;
}

Var SequenceLstmClassifier::build_logits(Tape& t, const Song& song, TrainContext* ctx) {
    if (song.empty()) throw ConfigError("lstm: empty song");
    const std::vector<int> ids = flatten_song_ids(song, config_.max_song_words);
    Var pooled;
    const Mask mask = word_mask(ids);
    if (!mask.any_valid()) {
        pooled = t.constant(Tensor({config_.hidden}));
    } else {
        Var rows = maybe_dropout(t, embedding_.lookup(t, ids), ctx);
        LstmState state{t.constant(Tensor({config_.hidden})), t.constant(Tensor({config_.hidden}))};
        std::vector<Var> hs;
        hs.reserve(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            state = lstm_step(t, cell_, t.row(rows, i), state);
            hs.push_back(state.h);
        }
        pooled = t.max_rows(t.stack_rows(hs), mask.valid_indices());
    }
    pooled = maybe_dropout(t, pooled, ctx);
    return matvec(t.param(w_out_), pooled) + t.param(b_out_);
}

std::vector<Parameter*> SequenceLstmClassifier::parameters() {
    std::vector<Parameter*> ps{&embedding_.table};
    for (Parameter* p : cell_.parameters()) ps.push_back(p);
    ps.push_back(&w_out_);
    ps.push_back(&b_out_);
    return ps;
}

std::vector<Parameter*> SequenceLstmClassifier::trainable_parameters() {
    auto ps = parameters();
    if (!embedding_.trainable) ps.erase(ps.begin());
    return ps;
}

// ---------------------------------------------------------------- hierarchical

HierarchicalClassifier::HierarchicalClassifier(ModelConfig cfg, std::uint64_t seed)
    : HierarchicalClassifier(std::move(cfg), EmbeddingMatrix{}, seed) {
    embedding_ = init_embeddings(config_.vocab_size, config_.embed_dim, seed);
    embedding_.trainable = config_.train_embeddings;
}

HierarchicalClassifier::HierarchicalClassifier(ModelConfig cfg, EmbeddingMatrix embedding,
                                               std::uint64_t seed)
    : Classifier(std::move(cfg)), embedding_(std::move(embedding)) {
    config_.validate();
    use_attention_ = config_.kind != ModelKind::hnl;
    Rng rng = model_rng(seed);
    const std::size_t h = config_.hidden;
    word_fwd_ = GruParams("word_fwd", h, config_.embed_dim, rng);
    word_bwd_ = GruParams("word_bwd", h, config_.embed_dim, rng);
    unit_fwd_ = GruParams("unit_fwd", h, 2 * h, rng);
    unit_bwd_ = GruParams("unit_bwd", h, 2 * h, rng);
    if (use_attention_) {
        word_att_ = AttentionParams("word_att", config_.attention, 2 * h, rng);
        unit_att_ = AttentionParams("unit_att", config_.attention, 2 * h, rng);
    }
    w_out_ = Parameter("out.w", init_weight_matrix(config_.classes, 2 * h, rng));
    b_out_ = Parameter("out.b", Tensor({config_.classes}));
    embedding_.trainable = config_.train_embeddings;
}

HierarchicalClassifier::Trace HierarchicalClassifier::build(Tape& t, const Song& song,
                                                            TrainContext* ctx, bool want_weights) {
    const auto units = extract_units(song, config_.granularity, config_.max_units, config_.max_unit_words);
    bool any_word = false;
    for (const auto& u : units) {
        if (!u.empty()) {
            any_word = true;
            break;
        }
    }
    if (units.empty() || !any_word) throw ConfigError(to_string(config_.kind) + ": empty song");

    const std::size_t width = 2 * config_.hidden;
    std::vector<Var> unit_vecs;
    unit_vecs.reserve(units.size());
    Mask unit_mask;
    unit_mask.valid.reserve(units.size());
    Trace trace;

    for (const auto& unit : units) {
        const Mask mask = word_mask(unit);
        // empty separator units are real structure and stay attendable;
        // units of nothing but PAD are padding and get masked out
        unit_mask.valid.push_back(unit.empty() || mask.any_valid());
        if (unit.empty() || !mask.any_valid()) {
            unit_vecs.push_back(t.constant(Tensor({width})));
            if (want_weights) trace.word_weights.emplace_back(unit.size(), Real(0));
            continue;
        }
        Var rows = maybe_dropout(t, embedding_.lookup(t, unit), ctx);
        std::vector<Var> xs(unit.size());
        for (std::size_t i = 0; i < unit.size(); ++i) xs[i] = t.row(rows, i);
        AttentionResult res = use_attention_ ? layer(t, word_fwd_, word_bwd_, word_att_, xs, mask)
                                             : mean_layer(t, word_fwd_, word_bwd_, xs, mask);
        unit_vecs.push_back(maybe_dropout(t, res.output, ctx));
        if (want_weights) trace.word_weights.push_back(to_vector(res.weights.value()));
    }

    AttentionResult song_res = use_attention_
                                   ? layer(t, unit_fwd_, unit_bwd_, unit_att_, unit_vecs, unit_mask)
                                   : mean_layer(t, unit_fwd_, unit_bwd_, unit_vecs, unit_mask);
    Var song_vec = maybe_dropout(t, song_res.output, ctx);
    trace.logits = matvec(t.param(w_out_), song_vec) + t.param(b_out_);
    if (want_weights) trace.unit_weights = to_vector(song_res.weights.value());
    return trace;
}

Var HierarchicalClassifier::build_logits(Tape& t, const Song& song, TrainContext* ctx) {
    return build(t, song, ctx, false).logits;
}

ForwardResult HierarchicalClassifier::forward(const Song& song) {
    Tape tape;
    Trace trace = build(tape, song, nullptr, use_attention_);
    Var probs = tape.softmax(trace.logits);
    ForwardResult res;
    res.probs = probs.value();
    res.predicted = predict(res.probs);
    res.unit_weights = std::move(trace.unit_weights);
    res.word_weights = std::move(trace.word_weights);
    return res;
}

std::vector<Parameter*> HierarchicalClassifier::parameters() {
    std::vector<Parameter*> ps{&embedding_.table};
    for (GruParams* g : {&word_fwd_, &word_bwd_, &unit_fwd_, &unit_bwd_}) {
        for (Parameter* p : g->parameters()) ps.push_back(p);
    }
    if (use_attention_) {
        for (Parameter* p : word_att_.parameters()) ps.push_back(p);
        for (Parameter* p : unit_att_.parameters()) ps.push_back(p);
    }
    ps.push_back(&w_out_);
    ps.push_back(&b_out_);
    return ps;
}

std::vector<Parameter*> HierarchicalClassifier::trainable_parameters() {
    auto ps = parameters();
    if (!embedding_.trainable) ps.erase(ps.begin());
    return ps;
}

std::unique_ptr<Classifier> make_classifier(const ModelConfig& config, std::uint64_t seed,
                                            EmbeddingMatrix* pretrained) {
    ModelConfig cfg = config;
    if (cfg.kind == ModelKind::hans) cfg.granularity = Granularity::segment;
    if (cfg.kind == ModelKind::mc) {
        return std::make_unique<MajorityClassifier>(cfg);
    }
    if (pretrained != nullptr) {
        if (pretrained->vocab_size() != cfg.vocab_size || pretrained->dim() != cfg.embed_dim) {
            throw ConfigError("make_classifier: embedding table " +
                              pretrained->table.value.shape_str() + " does not match config");
        }
        switch (cfg.kind) {
            case ModelKind::lr:
                return std::make_unique<MeanEmbeddingClassifier>(cfg, std::move(*pretrained), seed);
            case ModelKind::lstm:
                return std::make_unique<SequenceLstmClassifier>(cfg, std::move(*pretrained), seed);
            default:
                return std::make_unique<HierarchicalClassifier>(cfg, std::move(*pretrained), seed);
        }
    }
    switch (cfg.kind) {
        case ModelKind::lr: return std::make_unique<MeanEmbeddingClassifier>(cfg, seed);
        case ModelKind::lstm: return std::make_unique<SequenceLstmClassifier>(cfg, seed);
        default: return std::make_unique<HierarchicalClassifier>(cfg, seed);
    }
}

}  // namespace lyricnet
