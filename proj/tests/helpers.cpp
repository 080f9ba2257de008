#include "helpers.hpp"

#include <algorithm>
#include <cmath>

#include "lyricnet/training.hpp"

namespace testutil {

using namespace lyricnet;

namespace {

Real batch_loss(Classifier& model, const std::vector<Song>& songs, Tape* backprop_tape = nullptr) {
    Tape local;
    Tape& tape = backprop_tape != nullptr ? *backprop_tape : local;
    std::vector<Var> logits;
    std::vector<int> labels;
    for (const Song& song : songs) {
        logits.push_back(model.build_logits(tape, song, nullptr));
        labels.push_back(song.genre_id);
    }
    Var loss = cross_entropy(tape, logits, labels);
    const Real value = loss.value()[0];
    if (backprop_tape != nullptr) tape.backward(loss);
    return value;
}

}  // namespace

double fd_worst_rel_error(Classifier& model, const std::vector<Song>& songs, double step) {
    auto params = model.parameters();
    for (Parameter* p : params) p->zero_grad();
    {
        Tape tape;
        batch_loss(model, songs, &tape);
    }

    double worst = 0;
    for (Parameter* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const Real saved = p->value[i];
            p->value[i] = saved + static_cast<Real>(step);
            const double up = static_cast<double>(batch_loss(model, songs));
            p->value[i] = saved - static_cast<Real>(step);
            const double down = static_cast<double>(batch_loss(model, songs));
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = static_cast<double>(p->grad[i]);
            worst = std::max(worst, rel_err(analytic, numeric));
        }
    }
    return worst;
}

std::vector<RawRecord> make_synthetic_corpus(const SyntheticSpec& spec) {
    Rng rng(derive_seed(spec.seed, 0x73796eULL));
    // fraction of heavily diluted songs that lands the corpus on filler_fraction overall
    const double p_high = spec.filler_high > spec.filler_low
                              ? (spec.filler_fraction - spec.filler_low) /
                                    (spec.filler_high - spec.filler_low)
                              : 0.0;
    std::vector<RawRecord> records;
    records.reserve(spec.songs);
    for (std::size_t s = 0; s < spec.songs; ++s) {
        const std::size_t genre = s % spec.genres;  // balanced classes
        const double filler_rate = rng.uniform() < p_high ? spec.filler_high : spec.filler_low;
        std::string lyrics;
        std::size_t genre_tokens = 0;
        const std::size_t lines = spec.min_lines + rng.next_below(spec.max_lines - spec.min_lines + 1);
        const std::size_t seg_break = lines >= 3 ? 1 + rng.next_below(lines - 1) : lines;
        for (std::size_t l = 0; l < lines; ++l) {
            if (l == seg_break) lyrics += "\n";  // one segment break per song
            const std::size_t words = spec.min_words + rng.next_below(spec.max_words - spec.min_words + 1);
            for (std::size_t w = 0; w < words; ++w) {
                if (w) lyrics += " ";
                // the last line always opens with a genre word so no song is pure filler
                const bool force_genre = l == lines - 1 && w == 0 && genre_tokens == 0;
                if (!force_genre && rng.uniform() < filler_rate) {
                    lyrics += "fill" + std::to_string(rng.next_below(spec.filler_words));
                } else {
                    lyrics += "g" + std::to_string(genre) + "w" + std::to_string(rng.next_below(spec.genre_words));
                    ++genre_tokens;
                }
            }
            lyrics += "\n";
        }
        RawRecord rec;
        rec.id = "song-" + std::to_string(s);
        rec.artist = "artist-" + std::to_string(s % 37);
        rec.title = "title-" + std::to_string(s);
        rec.lyrics = lyrics;
        rec.genre = "genre-" + std::to_string(genre);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace testutil
