#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "lyricnet/commands.hpp"

namespace {

using namespace lyricnet;

std::string default_out_dir(const std::string& fallback) {
    const char* env = std::getenv("LYRICNET_OUT");
    return env != nullptr && *env != '\0' ? std::string(env) : fallback;
}

void add_model_flags(CLI::App* cmd, ModelConfig& model, std::string& kind, std::string& granularity) {
    cmd->add_option("--model", kind, "model type: mc|lr|lstm|hn-l|han-l|han-s")->required();
    cmd->add_option("--granularity", granularity, "attended units for han/hn: line|segment");
    cmd->add_option("--max-units", model.max_units, "maximum lines/segments per song");
    cmd->add_option("--max-words-per-unit", model.max_unit_words, "maximum words per line/segment");
    cmd->add_option("--max-song-words", model.max_song_words, "maximum words per song (lstm)");
    cmd->add_option("--hidden", model.hidden, "gru/lstm hidden units");
    cmd->add_option("--attention-size", model.attention, "attention states");
    cmd->add_option("--embed-dim", model.embed_dim, "word embedding dimension");
    cmd->add_flag("!--freeze-embeddings", model.train_embeddings, "do not fine-tune word embeddings");
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg) {
    cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size");
    cmd->add_option("--learning-rate", cfg.learning_rate, "rmsprop learning rate");
    cmd->add_option("--rmsprop-decay", cfg.rmsprop_decay, "rmsprop cache decay");
    cmd->add_option("--rmsprop-epsilon", cfg.rmsprop_epsilon, "rmsprop stabilizer");
    cmd->add_option("--dropout-p", cfg.dropout_p, "dropout probability");
    cmd->add_option("--clip-norm", cfg.clip_norm, "global gradient norm limit");
    cmd->add_option("--patience", cfg.patience, "early-stopping patience in epochs (0 disables)");
    cmd->add_option("--max-epochs", cfg.max_epochs, "epoch safety bound");
    cmd->add_option("--seed", cfg.seed, "run seed");
    cmd->add_flag("--timing", cfg.timing, "record real wall-clock seconds in the history csv");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical attention network for song-lyrics genre classification"};
    app.require_subcommand(1);

    // prepare
    PrepareOptions prep;
    std::string prep_out = "prepared";
    std::string filter_mode = "min-count";
    std::size_t filter_value = 50;
    auto* prepare = app.add_subcommand("prepare", "build splits, vocabulary and stats from a corpus");
    prepare->add_option("--corpus", prep.corpus_path, "json-lines corpus file")->required();
    prepare->add_option("--out", prep_out, "output directory");
    prepare->add_option("--filter-mode", filter_mode, "genre filter: min-count|top-n");
    prepare->add_option("--filter-value", filter_value, "k for min-count, n for top-n");
    prepare->add_option("--vocab-max", prep.vocab_max, "vocabulary size cap");
    prepare->add_option("--train-fraction", prep.split_spec.train, "training fraction");
    prepare->add_option("--val-fraction", prep.split_spec.val, "validation fraction");
    prepare->add_option("--test-fraction", prep.split_spec.test, "test fraction");
    prepare->add_option("--seed", prep.seed, "run seed");

    // fetch-genres
    FetchOptions fetch;
    auto* fetchc = app.add_subcommand("fetch-genres", "fill genre tags from an http metadata service");
    fetchc->add_option("--corpus", fetch.corpus_path, "json-lines corpus file")->required();
    fetchc->add_option("--out", fetch.out_path, "tagged corpus output file")->required();
    fetchc->add_option("--endpoint", fetch.config.base_url, "service base url")->required();
    fetchc->add_option("--query-template", fetch.config.query_template,
                       "query path with {artist}/{title} placeholders");
    fetchc->add_option("--genre-field", fetch.config.genre_field, "dot path to the genre in the response");
    fetchc->add_option("--rate-limit", fetch.config.rate_limit, "requests per second");
    fetchc->add_option("--attempts", fetch.config.attempts, "tries per record before skipping");

    // train
    TrainOptions tropt;
    std::string train_out = "run";
    std::string train_kind;
    std::string train_gran = "line";
    auto* trainc = app.add_subcommand("train", "train a model on prepared splits");
    trainc->add_option("--corpus", tropt.corpus_path, "json-lines corpus file")->required();
    trainc->add_option("--prepared", tropt.prepared_dir, "directory written by prepare")->required();
    trainc->add_option("--out", train_out, "output directory");
    trainc->add_option("--glove", tropt.glove_path, "pretrained word vectors (text format)");
    add_model_flags(trainc, tropt.model, train_kind, train_gran);
    add_train_flags(trainc, tropt.train_cfg);

    // eval
    EvalOptions evopt;
    auto* evalc = app.add_subcommand("eval", "score a checkpoint on a split");
    evalc->add_option("--checkpoint", evopt.checkpoint_path, "trained checkpoint")->required();
    evalc->add_option("--corpus", evopt.corpus_path, "json-lines corpus file")->required();
    evalc->add_option("--prepared", evopt.prepared_dir, "directory written by prepare")->required();
    evalc->add_option("--split", evopt.split, "train|val|test");
    evalc->add_option("--confusion-out", evopt.confusion_out, "confusion matrix csv path");
    evalc->add_option("--top-genres", evopt.top_genres, "restrict the csv to the k most frequent genres");
    evalc->add_option("--threads", evopt.threads, "evaluation threads");

    // predict
    PredictOptions propt;
    auto* predictc = app.add_subcommand("predict", "classify one lyrics text file");
    predictc->add_option("--checkpoint", propt.checkpoint_path, "trained checkpoint")->required();
    predictc->add_option("--lyrics", propt.lyrics_path, "plain-text lyrics file")->required();

    // visualize
    VisualizeOptions viopt;
    auto* visc = app.add_subcommand("visualize", "render attention weights for one song");
    visc->add_option("--checkpoint", viopt.checkpoint_path, "han checkpoint")->required();
    visc->add_option("--lyrics", viopt.lyrics_path, "plain-text lyrics file")->required();
    visc->add_option("--format", viopt.format, "ansi|html");
    visc->add_option("--out", viopt.out_path, "rendered output file")->required();
    visc->add_option("--top-lines", viopt.top_k, "units to render");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*prepare) {
            if (filter_mode == "min-count") {
                prep.filter = {GenreFilter::Mode::min_count, filter_value};
            } else if (filter_mode == "top-n") {
                prep.filter = {GenreFilter::Mode::top_n, filter_value};
            } else {
                throw ConfigError("unknown filter mode '" + filter_mode + "'");
            }
            prep.split_spec.seed = prep.seed;
            prep.out_dir = default_out_dir(prep_out);
            prep.verbose = true;
            cmd_prepare(prep);
        } else if (*fetchc) {
            cmd_fetch_genres(fetch);
        } else if (*trainc) {
            tropt.model.kind = parse_model_kind(train_kind);
            if (train_gran == "segment") {
                tropt.model.granularity = Granularity::segment;
            } else if (train_gran != "line") {
                throw ConfigError("unknown granularity '" + train_gran + "'");
            }
            // unit limits follow the granularity unless given explicitly
            if (!trainc->count("--max-units") && !trainc->count("--max-words-per-unit")) {
                tropt.model.apply_granularity_defaults();
            }
            tropt.out_dir = default_out_dir(train_out);
            tropt.verbose = true;
            cmd_train(tropt);
        } else if (*evalc) {
            cmd_eval(evopt);
        } else if (*predictc) {
            cmd_predict(propt);
        } else if (*visc) {
            cmd_visualize(viopt);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
