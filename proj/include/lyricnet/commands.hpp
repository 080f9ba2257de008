#pragma once

#include <string>
#include <vector>

#include "lyricnet/corpus.hpp"
#include "lyricnet/genre_fetch.hpp"
#include "lyricnet/models.hpp"
#include "lyricnet/training.hpp"

namespace lyricnet {

// prepared-directory file names shared by the subcommands
namespace prepared {
constexpr const char* kTrainManifest = "train.txt";
constexpr const char* kValManifest = "val.txt";
constexpr const char* kTestManifest = "test.txt";
constexpr const char* kVocab = "vocab.txt";
constexpr const char* kGenres = "genres.txt";
constexpr const char* kStats = "stats.json";
}  // namespace prepared

struct PrepareOptions {
    std::string corpus_path;
    std::string out_dir;
    GenreFilter filter;
    std::size_t vocab_max = 30000;
    SplitSpec split_spec;
    std::uint64_t seed = 0;
    bool verbose = false;
};

// dedup -> genre filter -> split -> vocabulary; writes manifests, vocab.txt,
// genres.txt and stats.json into out_dir
void cmd_prepare(const PrepareOptions& opt);

struct FetchOptions {
    std::string corpus_path;
    std::string out_path;
    FetchConfig config;
};

FetchSummary cmd_fetch_genres(const FetchOptions& opt);

struct TrainOptions {
    std::string corpus_path;
    std::string prepared_dir;
    std::string out_dir;
    ModelConfig model;        // classes/vocab_size filled in from the prepared artifacts
    TrainConfig train_cfg;
    std::string glove_path;   // optional pretrained vectors
    bool verbose = false;
};

struct TrainOutcome {
    std::string checkpoint_path;
    std::string history_path;
    TrainResult result;
};

TrainOutcome cmd_train(const TrainOptions& opt);

struct EvalOptions {
    std::string checkpoint_path;
    std::string corpus_path;
    std::string prepared_dir;
    std::string split = "test";        // train | val | test
    std::string confusion_out;         // empty skips the csv
    std::size_t top_genres = 0;        // restrict the csv to the k most frequent genres; 0 = all
    unsigned threads = 1;
    bool verbose = true;
};

EvalResult cmd_eval(const EvalOptions& opt);

struct PredictOptions {
    std::string checkpoint_path;
    std::string lyrics_path;
};

// returns the predicted genre name and prints it with its probability
std::string cmd_predict(const PredictOptions& opt);

struct VisualizeOptions {
    std::string checkpoint_path;
    std::string lyrics_path;
    std::string format = "ansi";  // ansi | html
    std::string out_path;         // rendered output; sidecar goes to out_path + ".weights.json"
    std::size_t top_k = 5;
    bool echo = true;             // ansi renderings are also printed to stdout
};

void cmd_visualize(const VisualizeOptions& opt);

// helpers shared with the tests
std::vector<Song> encode_manifest_songs(const std::vector<RawRecord>& corpus,
                                        const std::vector<std::string>& manifest_ids,
                                        const Vocabulary& vocab,
                                        const std::vector<std::string>& genres,
                                        std::size_t* dropped_empty = nullptr);

}  // namespace lyricnet
