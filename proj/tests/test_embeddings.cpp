#include <doctest.h>

#include "helpers.hpp"
#include "lyricnet/embeddings.hpp"
#include "lyricnet/models.hpp"
#include "lyricnet/training.hpp"

using namespace lyricnet;

namespace {

Vocabulary vocab_of(const std::vector<std::string>& tokens) {
    Vocabulary v;
    for (const auto& t : tokens) v.add(t);
    return v;
}

}  // namespace

TEST_CASE("load_glove reads rows for known tokens and reports coverage") {
    testutil::TempDir dir("glove");
    testutil::spit(dir.str("v.txt"), "the 0.1 0.2\nmars 1.0 2.0\nmoon 3.0 4.0\n");

    Vocabulary v = vocab_of({"the", "moon", "sun", "sky", "sea"});
    EmbeddingMatrix e = load_glove(dir.str("v.txt"), v, 2, 42);

    const auto the_id = static_cast<std::size_t>(v.id_of("the"));
    CHECK(e.table.value.at(the_id, 0) == doctest::Approx(0.1));
    CHECK(e.table.value.at(the_id, 1) == doctest::Approx(0.2));
    CHECK(e.coverage == doctest::Approx(2.0 / 5.0));  // the + moon out of 5 real tokens

    // PAD row zero
    CHECK(e.table.value.at(0, 0) == Real(0));
    CHECK(e.table.value.at(0, 1) == Real(0));

    // missing tokens drawn from uniform(-0.05, 0.05), reproducible per seed
    const auto sun_id = static_cast<std::size_t>(v.id_of("sun"));
    CHECK(std::abs(static_cast<double>(e.table.value.at(sun_id, 0))) <= 0.05);
    EmbeddingMatrix e2 = load_glove(dir.str("v.txt"), v, 2, 42);
    CHECK(e.table.value.data() == e2.table.value.data());
    EmbeddingMatrix e3 = load_glove(dir.str("v.txt"), v, 2, 43);
    CHECK(e.table.value.at(sun_id, 0) != e3.table.value.at(sun_id, 0));
}

TEST_CASE("load_glove rejects malformed lines and dimension mismatches") {
    testutil::TempDir dir("glove-bad");
    Vocabulary v = vocab_of({"the"});
    testutil::spit(dir.str("malformed.txt"), "the 0.1 oops\n");
    CHECK_THROWS_WITH_AS(load_glove(dir.str("malformed.txt"), v, 2, 1), doctest::Contains(":1:"),
                         ParseError);
    testutil::spit(dir.str("dim.txt"), "the 0.1 0.2 0.3\n");
    CHECK_THROWS_AS(load_glove(dir.str("dim.txt"), v, 2, 1), ConfigError);
}

TEST_CASE("lookup gathers rows and PAD stays zero") {
    EmbeddingMatrix e = init_embeddings(6, 3, 11);
    Tape t;
    Var rows = e.lookup(t, {0, 2, 2});
    CHECK(rows.value().rows() == 3);
    for (std::size_t c = 0; c < 3; ++c) CHECK(rows.value().at(0, c) == Real(0));
    CHECK(rows.value().at(1, 0) == e.table.value.at(2, 0));
    CHECK_THROWS_AS(e.lookup(t, {6}), DimensionError);
}

TEST_CASE("lookup gradient scatters into the gathered rows only") {
    EmbeddingMatrix e = init_embeddings(8, 4, 3);
    e.table.zero_grad();
    Tape t;
    Var rows = e.lookup(t, {2, 5, 2});
    t.backward(t.sum(rows));
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            const Real g = e.table.grad.at(r, c);
            if (r == 2) {
                CHECK(g == Real(2));  // appears twice in the batch
            } else if (r == 5) {
                CHECK(g == Real(1));
            } else {
                CHECK(g == Real(0));
            }
        }
    }
}

TEST_CASE("lookup gradient matches finite differences") {
    EmbeddingMatrix e = init_embeddings(5, 3, 9);
    const std::vector<int> ids{1, 3, 3};

    auto loss_value = [&]() {
        Tape t;
        Var rows = e.lookup(t, ids);
        return static_cast<double>(t.sum(t.hadamard(rows, rows)).value()[0]);
    };
    e.table.zero_grad();
    {
        Tape t;
        Var rows = e.lookup(t, ids);
        t.backward(t.sum(t.hadamard(rows, rows)));
    }
    const double h = 1e-5;
    for (std::size_t i = 0; i < e.table.value.size(); ++i) {
        const Real saved = e.table.value[i];
        e.table.value[i] = saved + static_cast<Real>(h);
        const double up = loss_value();
        e.table.value[i] = saved - static_cast<Real>(h);
        const double down = loss_value();
        e.table.value[i] = saved;
        CHECK(testutil::rel_err(static_cast<double>(e.table.grad[i]), (up - down) / (2 * h)) < 1e-4);
    }
}

TEST_CASE("frozen embeddings stay bitwise identical under lookup-backward") {
    EmbeddingMatrix e = init_embeddings(5, 3, 9);
    e.trainable = false;
    const auto before = e.table.value.data();
    Tape t;
    Var rows = e.lookup(t, {1, 2});
    t.backward(t.sum(rows));
    // constant lookup leaves no gradient on the table
    CHECK(e.table.grad.data() == std::vector<Real>(e.table.grad.size(), Real(0)));
    CHECK(e.table.value.data() == before);
}

TEST_CASE("after one optimizer step only the batch's rows change, and only when trainable") {
    using namespace testutil;
    auto step_once = [](Classifier& model, const Song& song) {
        auto params = model.trainable_parameters();
        for (Parameter* p : params) p->zero_grad();
        Tape t;
        Var loss = cross_entropy(t, {model.build_logits(t, song, nullptr)}, {song.genre_id});
        t.backward(loss);
        RmsProp opt(Real(0.01), Real(0.9), Real(1e-8));
        opt.step(params);
        model.post_step();
    };
    Song song;
    song.segments = {{{3, 5}, {5, 7}}};
    song.genre_id = 1;

    SUBCASE("trainable: exactly the looked-up rows move") {
        MeanEmbeddingClassifier lr(tiny_config(ModelKind::lr), 31);
        const Tensor before = lr.embedding().table.value;
        step_once(lr, song);
        const Tensor& after = lr.embedding().table.value;
        for (std::size_t r = 0; r < before.rows(); ++r) {
            bool touched = r == 3 || r == 5 || r == 7;
            bool changed = false;
            for (std::size_t c = 0; c < before.cols(); ++c) {
                changed = changed || before.at(r, c) != after.at(r, c);
            }
            CHECK(changed == touched);
        }
    }
    SUBCASE("frozen: bitwise unchanged by the step") {
        ModelConfig cfg = tiny_config(ModelKind::lr);
        cfg.train_embeddings = false;
        MeanEmbeddingClassifier lr(cfg, 31);
        const auto before = lr.embedding().table.value.data();
        step_once(lr, song);
        CHECK(lr.embedding().table.value.data() == before);
    }
}

TEST_CASE("zero_pad_row clears exactly row zero") {
    EmbeddingMatrix e = init_embeddings(4, 3, 2);
    e.table.value.at(0, 1) = Real(9);
    const Real keep = e.table.value.at(2, 1);
    e.zero_pad_row();
    CHECK(e.table.value.at(0, 1) == Real(0));
    CHECK(e.table.value.at(2, 1) == keep);
}
