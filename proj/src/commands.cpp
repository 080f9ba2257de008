#include "lyricnet/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include <json.hpp>

#include "lyricnet/checkpoint.hpp"
#include "lyricnet/embeddings.hpp"
#include "lyricnet/visualize.hpp"

namespace lyricnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

const char* manifest_for_split(const std::string& split) {
    if (split == "train") return prepared::kTrainManifest;
    if (split == "val") return prepared::kValManifest;
    if (split == "test") return prepared::kTestManifest;
    throw ConfigError("unknown split '" + split + "' (expected train|val|test)");
}

}  // namespace

std::vector<Song> encode_manifest_songs(const std::vector<RawRecord>& corpus,
                                        const std::vector<std::string>& manifest_ids,
                                        const Vocabulary& vocab,
                                        const std::vector<std::string>& genres,
                                        std::size_t* dropped_empty) {
    std::unordered_map<std::string, const RawRecord*> by_id;
    for (const auto& rec : corpus) by_id[rec.id] = &rec;
    std::unordered_map<std::string, int> genre_ids;
    for (std::size_t i = 0; i < genres.size(); ++i) genre_ids[genres[i]] = static_cast<int>(i);

    std::vector<Song> songs;
    songs.reserve(manifest_ids.size());
    std::size_t dropped = 0;
    for (const auto& id : manifest_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw ConfigError("manifest record '" + id + "' is not in the corpus file");
        }
        const RawRecord& rec = *it->second;
        if (!rec.genre || !genre_ids.count(*rec.genre)) {
            throw ConfigError("record '" + id + "' has no genre in the prepared genre list");
        }
        Song song = encode_song(tokenize(rec.lyrics), vocab, genre_ids[*rec.genre]);
        if (song.empty()) {
            ++dropped;
            continue;
        }
        songs.push_back(std::move(song));
    }
    if (dropped_empty != nullptr) *dropped_empty = dropped;
    return songs;
}

void cmd_prepare(const PrepareOptions& opt) {
    auto records = load_corpus(opt.corpus_path);
    const std::size_t records_in = records.size();

    // genre-less records cannot be labeled; drop them up front
    std::size_t without_genre = 0;
    {
        std::vector<RawRecord> tagged;
        tagged.reserve(records.size());
        for (auto& rec : records) {
            if (rec.genre) {
                tagged.push_back(std::move(rec));
            } else {
                ++without_genre;
            }
        }
        records = std::move(tagged);
    }
    if (records.empty()) throw ConfigError("prepare: no records carry a genre");

    records = deduplicate(records, opt.seed);
    const std::size_t after_dedup = records.size();

    FilterResult filtered = filter_genres(records, opt.filter);
    const std::size_t after_filter = filtered.records.size();

    SplitSpec spec = opt.split_spec;
    spec.seed = opt.seed;
    SplitResult splits = split(filtered.records, spec);

    Vocabulary vocab = build_vocabulary(filtered.records, opt.vocab_max);

    // token coverage over the surviving records
    std::size_t total_tokens = 0, known_tokens = 0;
    std::vector<std::size_t> genre_counts(filtered.genres.size(), 0);
    std::unordered_map<std::string, int> genre_ids;
    for (std::size_t i = 0; i < filtered.genres.size(); ++i) genre_ids[filtered.genres[i]] = static_cast<int>(i);
    for (const auto& rec : filtered.records) {
        ++genre_counts[static_cast<std::size_t>(genre_ids[*rec.genre])];
        for (const auto& tok : flatten_tokens(tokenize(rec.lyrics))) {
            ++total_tokens;
            if (vocab.id_of(tok) != Vocabulary::kUnkId) ++known_tokens;
        }
    }

    fs::create_directories(opt.out_dir);
    save_manifest(join(opt.out_dir, prepared::kTrainManifest), splits.train);
    save_manifest(join(opt.out_dir, prepared::kValManifest), splits.val);
    save_manifest(join(opt.out_dir, prepared::kTestManifest), splits.test);
    vocab.save(join(opt.out_dir, prepared::kVocab));
    save_genre_list(join(opt.out_dir, prepared::kGenres), filtered.genres);

    json stats;
    stats["records_in"] = records_in;
    stats["without_genre"] = without_genre;
    stats["after_dedup"] = after_dedup;
    stats["after_genre_filter"] = after_filter;
    stats["splits"] = {{"train", splits.train.size()}, {"val", splits.val.size()}, {"test", splits.test.size()}};
    json hist = json::array();
    for (std::size_t i = 0; i < filtered.genres.size(); ++i) {
        hist.push_back({{"genre", filtered.genres[i]}, {"id", i}, {"count", genre_counts[i]}});
    }
    stats["genre_histogram"] = hist;
    stats["vocab_size"] = vocab.size();
    stats["token_coverage"] = total_tokens == 0 ? 0.0
                                                : static_cast<double>(known_tokens) /
                                                      static_cast<double>(total_tokens);
    write_text_file(join(opt.out_dir, prepared::kStats), stats.dump(2) + "\n");

    if (opt.verbose) {
        std::printf("prepare: %zu records, %zu without genre, %zu after dedup, %zu kept in %zu genres\n",
                    records_in, without_genre, after_dedup, after_filter, filtered.genres.size());
        std::printf("prepare: splits %zu/%zu/%zu, vocabulary %zu tokens\n", splits.train.size(),
                    splits.val.size(), splits.test.size(), vocab.size());
    }
}

FetchSummary cmd_fetch_genres(const FetchOptions& opt) {
    auto records = load_corpus(opt.corpus_path);
    FetchSummary summary = fetch_genre_tags(records, opt.config);
    save_corpus(opt.out_path, records);
    return summary;
}

TrainOutcome cmd_train(const TrainOptions& opt) {
    const Vocabulary vocab = Vocabulary::load(join(opt.prepared_dir, prepared::kVocab));
    const auto genres = load_genre_list(join(opt.prepared_dir, prepared::kGenres));
    const auto corpus = load_corpus(opt.corpus_path);

    std::size_t dropped = 0;
    const auto train_songs = encode_manifest_songs(
        corpus, load_manifest(join(opt.prepared_dir, prepared::kTrainManifest)), vocab, genres, &dropped);
    const auto val_songs = encode_manifest_songs(
        corpus, load_manifest(join(opt.prepared_dir, prepared::kValManifest)), vocab, genres);
    if (dropped > 0) std::cerr << "train: dropped " << dropped << " empty songs\n";

    ModelConfig cfg = opt.model;
    cfg.classes = genres.size();
    cfg.vocab_size = vocab.size();
    cfg.dropout_p = opt.train_cfg.dropout_p;

    fs::create_directories(opt.out_dir);
    TrainOutcome outcome;
    outcome.checkpoint_path = join(opt.out_dir, "checkpoint.bin");
    outcome.history_path = join(opt.out_dir, "history.csv");

    if (cfg.kind == ModelKind::mc) {
        MajorityClassifier model(cfg);
        model.fit(train_songs);
        save_checkpoint(outcome.checkpoint_path,
                        snapshot(model, vocab, genres, opt.train_cfg.seed, {}));
        save_history_csv(outcome.history_path, {}, opt.train_cfg.timing);
        if (opt.verbose) {
            std::printf("train: mc predicts '%s'\n",
                        genres[static_cast<std::size_t>(model.majority_id())].c_str());
        }
        return outcome;
    }

    std::unique_ptr<Classifier> model;
    if (!opt.glove_path.empty()) {
        EmbeddingMatrix pretrained = load_glove(opt.glove_path, vocab, cfg.embed_dim, opt.train_cfg.seed);
        if (opt.verbose) std::printf("train: embedding coverage %.1f%%\n", 100.0 * pretrained.coverage);
        model = make_classifier(cfg, opt.train_cfg.seed, &pretrained);
    } else {
        model = make_classifier(cfg, opt.train_cfg.seed);
    }

    TrainResult result = train(*model, train_songs, val_songs, opt.train_cfg, opt.verbose);
    save_checkpoint(outcome.checkpoint_path,
                    snapshot(*model, vocab, genres, opt.train_cfg.seed, result.history));
    save_history_csv(outcome.history_path, result.history, opt.train_cfg.timing);
    outcome.result = std::move(result);
    if (opt.verbose && outcome.result.best_epoch > 0) {
        std::printf("train: kept epoch %zu (best validation loss)\n", outcome.result.best_epoch);
    }
    return outcome;
}

namespace {

// csv rows/columns limited to the k most frequent genres of the split
void save_top_confusion(const std::string& path, const ConfusionMatrix& cm,
                        const std::vector<std::string>& genres, std::size_t k) {
    std::vector<std::size_t> order(genres.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ca = cm.row_sum(a), cb = cm.row_sum(b);
        if (ca != cb) return ca > cb;
        return genres[a] < genres[b];
    });
    if (order.size() > k) order.resize(k);

    ConfusionMatrix sub(order.size());
    std::vector<std::string> names;
    for (std::size_t i = 0; i < order.size(); ++i) {
        names.push_back(genres[order[i]]);
        for (std::size_t j = 0; j < order.size(); ++j) sub.at(i, j) = cm.at(order[i], order[j]);
    }
    save_confusion_csv(path, sub, names);
}

}  // namespace

EvalResult cmd_eval(const EvalOptions& opt) {
    Checkpoint ckpt = load_checkpoint(opt.checkpoint_path);
    const Vocabulary vocab = Vocabulary::load(join(opt.prepared_dir, prepared::kVocab));
    if (!(vocab == ckpt.vocab)) {
        throw ConfigError("eval: vocabulary mismatch between checkpoint and prepared corpus");
    }
    auto model = restore(ckpt);
    const auto corpus = load_corpus(opt.corpus_path);
    const auto songs = encode_manifest_songs(
        corpus, load_manifest(join(opt.prepared_dir, manifest_for_split(opt.split))), vocab, ckpt.genres);

    EvalResult result = evaluate(*model, songs, opt.threads);
    if (opt.verbose) {
        std::printf("%s accuracy: %.2f%%\n", opt.split.c_str(), 100.0 * result.accuracy);
    }
    if (!opt.confusion_out.empty()) {
        if (opt.top_genres > 0) {
            save_top_confusion(opt.confusion_out, result.confusion, ckpt.genres, opt.top_genres);
        } else {
            save_confusion_csv(opt.confusion_out, result.confusion, ckpt.genres);
        }
    }
    return result;
}

std::string cmd_predict(const PredictOptions& opt) {
    Checkpoint ckpt = load_checkpoint(opt.checkpoint_path);
    auto model = restore(ckpt);
    const Song song = encode_song(tokenize(read_text_file(opt.lyrics_path)), ckpt.vocab, 0);
    if (song.empty()) throw ConfigError("predict: the lyrics file holds no words");
    ForwardResult res = model->forward(song);
    const std::string& genre = ckpt.genres.at(static_cast<std::size_t>(res.predicted));
    std::printf("%s (p=%.4f)\n", genre.c_str(),
                static_cast<double>(res.probs[static_cast<std::size_t>(res.predicted)]));
    return genre;
}

void cmd_visualize(const VisualizeOptions& opt) {
    Checkpoint ckpt = load_checkpoint(opt.checkpoint_path);
    if (ckpt.config.kind != ModelKind::hanl && ckpt.config.kind != ModelKind::hans) {
        throw ConfigError("visualize: model '" + to_string(ckpt.config.kind) +
                          "' has no attention weights to show; train a han-l or han-s model");
    }
    if (opt.format != "ansi" && opt.format != "html") {
        throw ConfigError("visualize: unknown format '" + opt.format + "' (expected ansi|html)");
    }
    if (opt.out_path.empty()) throw ConfigError("visualize: output path required");

    auto model = restore(ckpt);
    const TokenizedLyrics lyrics = tokenize(read_text_file(opt.lyrics_path));
    const Song song = encode_song(lyrics, ckpt.vocab, 0);
    if (song.empty()) throw ConfigError("visualize: the lyrics file holds no words");

    ForwardResult res = model->forward(song);

    VisualizationInput in;
    in.unit_tokens = extract_unit_tokens(lyrics, ckpt.config.granularity, ckpt.config.max_units,
                                         ckpt.config.max_unit_words);
    in.unit_weights = res.unit_weights;
    in.word_weights = res.word_weights;
    in.predicted_genre = ckpt.genres.at(static_cast<std::size_t>(res.predicted));

    const auto order = top_units(in.unit_weights, opt.top_k);
    const std::string rendered = opt.format == "html" ? render_html(in, order) : render_ansi(in, order);
    write_text_file(opt.out_path, rendered);
    write_text_file(opt.out_path + ".weights.json", weights_sidecar_json(in, order));
    if (opt.echo && opt.format == "ansi") std::fputs(rendered.c_str(), stdout);
}

}  // namespace lyricnet
