#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "lyricnet/checkpoint.hpp"
#include "lyricnet/commands.hpp"
#include "lyricnet/visualize.hpp"

using namespace lyricnet;

namespace {

// small corpus with an unbalanced genre to exercise filtering and mc
std::vector<RawRecord> toy_corpus() {
    testutil::SyntheticSpec spec;
    spec.songs = 61;
    spec.genres = 3;
    spec.genre_words = 12;
    spec.filler_words = 8;
    spec.seed = 5;
    auto records = testutil::make_synthetic_corpus(spec);
    // genre-3 with a single instance; min-count(2) must drop it
    RawRecord rare;
    rare.id = "rare";
    rare.artist = "x";
    rare.title = "y";
    rare.lyrics = "lonely words here\n";
    rare.genre = "genre-rare";
    records.push_back(rare);
    return records;
}

PrepareOptions prepare_options(const std::string& corpus, const std::string& out) {
    PrepareOptions opt;
    opt.corpus_path = corpus;
    opt.out_dir = out;
    opt.filter = {GenreFilter::Mode::min_count, 2};
    opt.vocab_max = 200;
    opt.split_spec.seed = opt.seed = 11;
    return opt;
}

}  // namespace

TEST_CASE("cmd_prepare writes manifests, vocabulary, genres and stats") {
    testutil::TempDir dir("prep");
    const std::string corpus = dir.str("corpus.jsonl");
    save_corpus(corpus, toy_corpus());
    cmd_prepare(prepare_options(corpus, dir.str("prep")));

    const auto genres = load_genre_list(dir.str("prep") + "/genres.txt");
    CHECK(genres.size() == 3);  // the rare genre is filtered out

    const auto stats = nlohmann::json::parse(testutil::slurp(dir.str("prep") + "/stats.json"));
    CHECK(stats.at("records_in").get<std::size_t>() == 62);
    bool rare_listed = false;
    std::size_t histogram_total = 0;
    for (const auto& row : stats.at("genre_histogram")) {
        histogram_total += row.at("count").get<std::size_t>();
        if (row.at("genre").get<std::string>() == "genre-rare") rare_listed = true;
    }
    CHECK_FALSE(rare_listed);
    CHECK(histogram_total == stats.at("after_genre_filter").get<std::size_t>());

    const auto train_ids = load_manifest(dir.str("prep") + "/train.txt");
    const auto val_ids = load_manifest(dir.str("prep") + "/val.txt");
    const auto test_ids = load_manifest(dir.str("prep") + "/test.txt");
    CHECK(train_ids.size() + val_ids.size() + test_ids.size() ==
          stats.at("after_genre_filter").get<std::size_t>());
}

TEST_CASE("cmd_prepare histogram matches a counting oracle on a 117-genre corpus") {
    testutil::TempDir dir("prep117");
    Rng rng(13);
    std::vector<RawRecord> records;
    std::map<std::string, std::size_t> counts;
    for (int i = 0; i < 3000; ++i) {
        RawRecord r;
        r.id = std::to_string(i);
        r.lyrics = "word" + std::to_string(i) + " la la\n";  // unique text, no dedup collapse
        r.genre = "g" + std::to_string(rng.next_below(117));
        ++counts[*r.genre];
        records.push_back(std::move(r));
    }
    const std::string corpus = dir.str("c.jsonl");
    save_corpus(corpus, records);
    PrepareOptions opt = prepare_options(corpus, dir.str("out"));
    opt.filter = {GenreFilter::Mode::min_count, 20};
    cmd_prepare(opt);

    const auto stats = nlohmann::json::parse(testutil::slurp(dir.str("out") + "/stats.json"));
    for (const auto& row : stats.at("genre_histogram")) {
        CHECK(row.at("count").get<std::size_t>() == counts.at(row.at("genre").get<std::string>()));
    }
}

TEST_CASE("cmd_prepare twice produces byte-identical outputs") {
    testutil::TempDir dir("prep-det");
    const std::string corpus = dir.str("corpus.jsonl");
    save_corpus(corpus, toy_corpus());
    cmd_prepare(prepare_options(corpus, dir.str("a")));
    cmd_prepare(prepare_options(corpus, dir.str("b")));
    for (const char* name : {"train.txt", "val.txt", "test.txt", "vocab.txt", "genres.txt", "stats.json"}) {
        CHECK(testutil::slurp(dir.str("a") + "/" + name) == testutil::slurp(dir.str("b") + "/" + name));
    }
}

TEST_CASE("cmd_train mc: one pass, checkpoint holds the majority, accuracy is its frequency") {
    testutil::TempDir dir("mc");
    const std::string corpus = dir.str("corpus.jsonl");
    save_corpus(corpus, toy_corpus());
    cmd_prepare(prepare_options(corpus, dir.str("prep")));

    TrainOptions topt;
    topt.corpus_path = corpus;
    topt.prepared_dir = dir.str("prep");
    topt.out_dir = dir.str("run");
    topt.model = testutil::tiny_config(ModelKind::mc);
    topt.train_cfg.seed = 1;
    const auto outcome = cmd_train(topt);

    Checkpoint ckpt = load_checkpoint(outcome.checkpoint_path);
    CHECK(ckpt.config.kind == ModelKind::mc);
    CHECK(ckpt.majority_id >= 0);

    EvalOptions eopt;
    eopt.checkpoint_path = outcome.checkpoint_path;
    eopt.corpus_path = corpus;
    eopt.prepared_dir = dir.str("prep");
    eopt.split = "test";
    eopt.verbose = false;
    EvalResult res = cmd_eval(eopt);

    // majority fraction of the test split, counted by hand
    const auto vocab = Vocabulary::load(dir.str("prep") + "/vocab.txt");
    const auto genres = load_genre_list(dir.str("prep") + "/genres.txt");
    const auto songs = encode_manifest_songs(load_corpus(corpus),
                                             load_manifest(dir.str("prep") + "/test.txt"), vocab, genres);
    std::size_t majority = 0;
    for (const auto& s : songs) {
        if (s.genre_id == ckpt.majority_id) ++majority;
    }
    CHECK(res.accuracy == doctest::Approx(static_cast<double>(majority) / songs.size()));
}

TEST_CASE("cmd_train + cmd_eval on a tiny han-l, with confusion csv variants") {
    testutil::TempDir dir("train");
    const std::string corpus = dir.str("corpus.jsonl");
    save_corpus(corpus, toy_corpus());
    cmd_prepare(prepare_options(corpus, dir.str("prep")));

    TrainOptions topt;
    topt.corpus_path = corpus;
    topt.prepared_dir = dir.str("prep");
    topt.out_dir = dir.str("run");
    topt.model = testutil::tiny_config(ModelKind::hanl);
    topt.train_cfg.seed = 5;
    topt.train_cfg.batch_size = 16;
    topt.train_cfg.max_epochs = 2;
    topt.train_cfg.patience = 0;
    const auto outcome = cmd_train(topt);
    CHECK(outcome.result.history.size() == 2);
    CHECK(testutil::slurp(outcome.history_path).find("epoch,") == 0);

    EvalOptions eopt;
    eopt.checkpoint_path = outcome.checkpoint_path;
    eopt.corpus_path = corpus;
    eopt.prepared_dir = dir.str("prep");
    eopt.confusion_out = dir.str("confusion.csv");
    eopt.verbose = false;
    cmd_eval(eopt);
    const std::string full = testutil::slurp(dir.str("confusion.csv"));
    CHECK(full.find("genre,") == 0);
    CHECK(std::count(full.begin(), full.end(), '\n') == 4);  // header + 3 genres

    eopt.confusion_out = dir.str("top2.csv");
    eopt.top_genres = 2;
    cmd_eval(eopt);
    const std::string top2 = testutil::slurp(dir.str("top2.csv"));
    CHECK(std::count(top2.begin(), top2.end(), '\n') == 3);  // header + 2
}

TEST_CASE("cmd_eval rejects a vocabulary mismatch") {
    testutil::TempDir dir("mismatch");
    const std::string corpus = dir.str("corpus.jsonl");
    save_corpus(corpus, toy_corpus());
    cmd_prepare(prepare_options(corpus, dir.str("prep")));

    TrainOptions topt;
    topt.corpus_path = corpus;
    topt.prepared_dir = dir.str("prep");
    topt.out_dir = dir.str("run");
    topt.model = testutil::tiny_config(ModelKind::mc);
    const auto outcome = cmd_train(topt);

    // re-prepare with a different vocabulary cap
    PrepareOptions p2 = prepare_options(corpus, dir.str("prep2"));
    p2.vocab_max = 5;
    cmd_prepare(p2);

    EvalOptions eopt;
    eopt.checkpoint_path = outcome.checkpoint_path;
    eopt.corpus_path = corpus;
    eopt.prepared_dir = dir.str("prep2");
    eopt.verbose = false;
    CHECK_THROWS_WITH_AS(cmd_eval(eopt), doctest::Contains("vocabulary mismatch"), ConfigError);
}

namespace {

// train a tiny han-l on the toy corpus and return checkpoint path + working dir
struct VisFixture {
    testutil::TempDir dir{"vis"};
    std::string corpus, checkpoint;

    VisFixture() {
        corpus = dir.str("corpus.jsonl");
        save_corpus(corpus, toy_corpus());
        cmd_prepare(prepare_options(corpus, dir.str("prep")));
        TrainOptions topt;
        topt.corpus_path = corpus;
        topt.prepared_dir = dir.str("prep");
        topt.out_dir = dir.str("run");
        topt.model = testutil::tiny_config(ModelKind::hanl);
        topt.model.max_units = 60;
        topt.model.max_unit_words = 10;
        topt.train_cfg.max_epochs = 1;
        topt.train_cfg.patience = 0;
        topt.train_cfg.batch_size = 16;
        checkpoint = cmd_train(topt).checkpoint_path;
    }
};

}  // namespace

TEST_CASE("cmd_visualize renders the top five lines and a bitwise-exact sidecar") {
    VisFixture fx;
    // seven lines over two segments -> 8 units with the separator
    const std::string lyrics =
        "one two three\nfour five\nsix seven\neight\n\nnine ten\neleven\ntwelve\n";
    testutil::spit(fx.dir.str("song.txt"), lyrics);

    VisualizeOptions vopt;
    vopt.checkpoint_path = fx.checkpoint;
    vopt.lyrics_path = fx.dir.str("song.txt");
    vopt.format = "ansi";
    vopt.out_path = fx.dir.str("render.txt");
    vopt.echo = false;
    cmd_visualize(vopt);

    const auto sidecar = nlohmann::json::parse(testutil::slurp(fx.dir.str("render.txt.weights.json")));
    const auto rendered = sidecar.at("rendered_units").get<std::vector<std::size_t>>();
    CHECK(rendered.size() == 5);  // min(5, 8)
    const auto weights = sidecar.at("unit_weights").get<std::vector<double>>();
    CHECK(weights.size() == 8);
    for (std::size_t i = 1; i < rendered.size(); ++i) {
        CHECK(weights[rendered[i - 1]] >= weights[rendered[i]]);  // descending order
    }
    // every skipped unit weighs no more than the lightest rendered one
    for (std::size_t u = 0; u < weights.size(); ++u) {
        if (std::find(rendered.begin(), rendered.end(), u) == rendered.end()) {
            CHECK(weights[u] <= weights[rendered.back()]);
        }
    }

    // sidecar weights are bitwise equal to a fresh forward pass
    Checkpoint ckpt = load_checkpoint(fx.checkpoint);
    auto model = restore(ckpt);
    const Song song = encode_song(tokenize(lyrics), ckpt.vocab, 0);
    auto res = model->forward(song);
    REQUIRE(res.unit_weights.size() == weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        CHECK(weights[i] == static_cast<double>(res.unit_weights[i]));
    }
    const auto word_weights = sidecar.at("word_weights").get<std::vector<std::vector<double>>>();
    REQUIRE(word_weights.size() == res.word_weights.size());
    for (std::size_t u = 0; u < word_weights.size(); ++u) {
        REQUIRE(word_weights[u].size() == res.word_weights[u].size());
        for (std::size_t w = 0; w < word_weights[u].size(); ++w) {
            CHECK(word_weights[u][w] == static_cast<double>(res.word_weights[u][w]));
        }
    }
}

TEST_CASE("cmd_visualize one-line song renders weight one") {
    VisFixture fx;
    testutil::spit(fx.dir.str("one.txt"), "hello world\n");
    VisualizeOptions vopt;
    vopt.checkpoint_path = fx.checkpoint;
    vopt.lyrics_path = fx.dir.str("one.txt");
    vopt.out_path = fx.dir.str("one.out");
    vopt.echo = false;
    cmd_visualize(vopt);
    const auto sidecar = nlohmann::json::parse(testutil::slurp(fx.dir.str("one.out.weights.json")));
    const auto weights = sidecar.at("unit_weights").get<std::vector<double>>();
    REQUIRE(weights.size() == 1);
    CHECK(weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(testutil::slurp(fx.dir.str("one.out")).find("1.0000") != std::string::npos);
}

TEST_CASE("cmd_visualize html output is self-contained and escapes content") {
    VisFixture fx;
    testutil::spit(fx.dir.str("song.txt"), "don't stop\nnever stop\n");
    VisualizeOptions vopt;
    vopt.checkpoint_path = fx.checkpoint;
    vopt.lyrics_path = fx.dir.str("song.txt");
    vopt.format = "html";
    vopt.out_path = fx.dir.str("render.html");
    cmd_visualize(vopt);
    const std::string html = testutil::slurp(fx.dir.str("render.html"));
    CHECK(html.find("<!DOCTYPE html>") == 0);
    CHECK(html.find("don&#39;t") != std::string::npos);
    CHECK(html.find("linear-gradient") != std::string::npos);  // the legend
    CHECK(html.find("src=") == std::string::npos);             // no external assets
    CHECK(html.find("href=") == std::string::npos);
}

TEST_CASE("cmd_visualize rejects checkpoints without attention") {
    testutil::TempDir dir("vis-rej");
    const std::string corpus = dir.str("corpus.jsonl");
    save_corpus(corpus, toy_corpus());
    cmd_prepare(prepare_options(corpus, dir.str("prep")));
    TrainOptions topt;
    topt.corpus_path = corpus;
    topt.prepared_dir = dir.str("prep");
    topt.out_dir = dir.str("run");
    topt.model = testutil::tiny_config(ModelKind::mc);
    const auto outcome = cmd_train(topt);

    VisualizeOptions vopt;
    vopt.checkpoint_path = outcome.checkpoint_path;
    vopt.lyrics_path = corpus;
    vopt.out_path = dir.str("x");
    CHECK_THROWS_WITH_AS(cmd_visualize(vopt), doctest::Contains("no attention"), ConfigError);
}

TEST_CASE("cmd_predict names a genre from the checkpoint's label set") {
    VisFixture fx;
    testutil::spit(fx.dir.str("song.txt"), "g0w1 g0w2 g0w3\n");
    PredictOptions popt;
    popt.checkpoint_path = fx.checkpoint;
    popt.lyrics_path = fx.dir.str("song.txt");
    const std::string genre = cmd_predict(popt);
    const auto genres = load_genre_list(fx.dir.str("prep") + "/genres.txt");
    CHECK(std::find(genres.begin(), genres.end(), genre) != genres.end());
}

TEST_CASE("top_units ties include the earlier line") {
    CHECK(top_units({Real(0.3), Real(0.3), Real(0.4)}, 2) == std::vector<std::size_t>{2, 0});
    CHECK(top_units({Real(0.2)}, 5) == std::vector<std::size_t>{0});
}
