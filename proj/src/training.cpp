#include "lyricnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

namespace lyricnet {

void TrainConfig::validate() const {
    if (batch_size == 0 || max_epochs == 0) throw ConfigError("train config: zero batch size or epochs");
    if (learning_rate <= 0 || rmsprop_decay <= 0 || rmsprop_decay >= 1 || rmsprop_epsilon <= 0) {
        throw ConfigError("train config: bad optimizer constants");
    }
    if (dropout_p < 0 || dropout_p >= 1) throw ConfigError("train config: dropout must lie in [0,1)");
    if (clip_norm <= 0) throw ConfigError("train config: clip norm must be positive");
}

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::int64_t s = 0;
    for (std::size_t p = 0; p < classes; ++p) s += at(truth, p);
    return s;
}

std::int64_t ConfusionMatrix::diagonal() const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < classes; ++i) s += at(i, i);
    return s;
}

Var cross_entropy(Tape& tape, const std::vector<Var>& logits, const std::vector<int>& labels) {
    if (logits.empty() || logits.size() != labels.size()) {
        throw DimensionError("cross_entropy: " + std::to_string(logits.size()) + " logit vectors vs " +
                             std::to_string(labels.size()) + " labels");
    }
    Var loss;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const std::size_t classes = logits[k].value().size();
        if (labels[k] < 0 || static_cast<std::size_t>(labels[k]) >= classes) {
            throw DimensionError("cross_entropy: label " + std::to_string(labels[k]) +
                                 " out of range for " + std::to_string(classes) + " classes");
        }
        Var term = tape.neg(tape.pick(tape.log_softmax(logits[k]), static_cast<std::size_t>(labels[k])));
        loss = k == 0 ? term : loss + term;
    }
    return loss;
}

Real nll_from_logits(const Tensor& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw DimensionError("nll_from_logits: label out of range");
    }
    const Real mx = *std::max_element(logits.data().begin(), logits.data().end());
    Real denom = 0;
    for (Real v : logits.data()) denom += std::exp(v - mx);
    return -(logits[static_cast<std::size_t>(label)] - mx - std::log(denom));
}

Real clip_gradients(const std::vector<Parameter*>& params, Real max_norm) {
    Real sq = 0;
    for (const Parameter* p : params) {
        for (Real g : p->grad.data()) {
            if (!std::isfinite(g)) {
                throw NumericError("clip_gradients: non-finite gradient in '" + p->name + "'");
            }
            sq += g * g;
        }
    }
    const Real norm = std::sqrt(sq);
    if (norm > max_norm) {
        const Real factor = max_norm / norm;
        for (Parameter* p : params) {
            for (Real& g : p->grad.data()) g *= factor;
        }
    }
    return norm;
}

void RmsProp::step(const std::vector<Parameter*>& params) {
    for (Parameter* p : params) {
        auto [it, inserted] = cache_.try_emplace(p, Tensor(p->value.shape()));
        Tensor& cache = it->second;
        if (!inserted && !cache.same_shape(p->grad)) {
            throw DimensionError("rmsprop: cache shape " + cache.shape_str() +
                                 " does not match gradient " + p->grad.shape_str());
        }
        for (std::size_t i = 0; i < cache.size(); ++i) {
            const Real g = p->grad[i];
            cache[i] = decay_ * cache[i] + (Real(1) - decay_) * g * g;
            p->value[i] -= lr_ * g / (std::sqrt(cache[i]) + epsilon_);
        }
    }
}

bool EarlyStopping::feed(Real val_loss) {
    ++epoch_;
    if (best_epoch_ == 0 || val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch_;
        streak_ = 0;
        return false;
    }
    ++streak_;
    return patience_ > 0 && streak_ >= patience_;
}

namespace {

struct ParamSnapshot {
    std::vector<Tensor> values;

    static ParamSnapshot take(const std::vector<Parameter*>& params) {
        ParamSnapshot s;
        s.values.reserve(params.size());
        for (const Parameter* p : params) s.values.push_back(p->value);
        return s;
    }

    void restore(const std::vector<Parameter*>& params) const {
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
    }
};

// per-song losses and predictions summed in song order, so results do not depend
// on the thread count
EvalResult score_songs(Classifier& model, const std::vector<Song>& songs, unsigned threads) {
    const std::size_t classes = model.config().classes;
    EvalResult result;
    result.confusion = ConfusionMatrix(classes);
    std::vector<Real> losses(songs.size(), 0);
    std::vector<int> predictions(songs.size(), -1);

    const bool mc = model.config().kind == ModelKind::mc;
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (mc) {
                predictions[i] = model.predict_class(songs[i]);
                losses[i] = 0;
            } else {
                Tape tape;
                Var logits = model.build_logits(tape, songs[i], nullptr);
                losses[i] = nll_from_logits(logits.value(), songs[i].genre_id);
                predictions[i] = predict(tape.softmax(logits).value());
            }
        }
    };

    if (threads <= 1 || songs.size() < 2 * threads) {
        work(0, songs.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (songs.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(songs.size(), begin + chunk);
            if (begin < end) pool.emplace_back(work, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    Real loss_sum = 0;
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < songs.size(); ++i) {
        loss_sum += losses[i];
        const auto truth = static_cast<std::size_t>(songs[i].genre_id);
        const auto pred = static_cast<std::size_t>(predictions[i]);
        ++result.confusion.at(truth, pred);
        if (truth == pred) ++correct;
    }
    result.accuracy = songs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(songs.size());
    result.mean_loss = songs.empty() ? Real(0) : loss_sum / static_cast<Real>(songs.size());
    return result;
}

}  // namespace

TrainResult train(Classifier& model, const std::vector<Song>& train_songs,
                  const std::vector<Song>& val_songs, const TrainConfig& cfg, bool verbose) {
    cfg.validate();
    if (train_songs.empty() || val_songs.empty()) {
        throw ConfigError("train: empty training or validation split");
    }

    auto params = model.trainable_parameters();
    RmsProp optimizer(cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_epsilon);
    EarlyStopping stopping(cfg.patience);
    Rng shuffle_rng(derive_seed(cfg.seed, 0x7368756646ULL));
    Rng dropout_rng(derive_seed(cfg.seed, 0x64726f70ULL));

    TrainResult result;
    ParamSnapshot best = ParamSnapshot::take(params);
    std::size_t best_epoch = 0;

    std::vector<std::size_t> order(train_songs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);

        Real epoch_loss = 0;
        bool aborted = false;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (Parameter* p : params) p->zero_grad();

            Tape tape;
            TrainContext ctx{cfg.dropout_p, &dropout_rng};
            std::vector<Var> logits;
            std::vector<int> labels;
            logits.reserve(end - start);
            try {
                for (std::size_t i = start; i < end; ++i) {
                    const Song& song = train_songs[order[i]];
                    logits.push_back(model.build_logits(tape, song, &ctx));
                    labels.push_back(song.genre_id);
                }
                Var loss = cross_entropy(tape, logits, labels);
                epoch_loss += loss.value()[0];
                tape.backward(loss);
                clip_gradients(params, cfg.clip_norm);
                optimizer.step(params);
                model.post_step();
            } catch (const NumericError& e) {
                std::cerr << "train: aborting at epoch " << epoch << ": " << e.what() << "\n";
                aborted = true;
                break;
            }
        }
        if (aborted) {
            result.diverged = true;
            break;
        }

        const EvalResult val = score_songs(model, val_songs, 1);
        if (!std::isfinite(val.mean_loss)) {
            std::cerr << "train: validation loss diverged at epoch " << epoch << "\n";
            result.diverged = true;
            break;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<Real>(train_songs.size());
        stats.val_loss = val.mean_loss;
        stats.val_accuracy = static_cast<Real>(val.accuracy);
        stats.wall_seconds =
            cfg.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count()
                       : 0.0;
        result.history.push_back(stats);
        if (verbose) {
            std::printf("epoch %zu  train loss %.6f  val loss %.6f  val acc %.2f%%\n", epoch,
                        static_cast<double>(stats.train_loss), static_cast<double>(stats.val_loss),
                        100.0 * static_cast<double>(stats.val_accuracy));
        }

        const bool stop = stopping.feed(val.mean_loss);
        if (stopping.best_epoch() == epoch) {
            best = ParamSnapshot::take(params);
            best_epoch = epoch;
        }
        if (stop) break;
    }

    // fall back to the best epoch, or to the initial parameters when training
    // diverged before completing one
    if (best_epoch > 0 || result.diverged) {
        best.restore(params);
        model.post_step();
    }
    result.best_epoch = best_epoch;
    return result;
}

EvalResult evaluate(Classifier& model, const std::vector<Song>& songs, unsigned threads) {
    if (songs.empty()) throw ConfigError("evaluate: empty split");
    return score_songs(model, songs, threads);
}

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history, bool timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("history: cannot write " + path);
    out << "epoch,train_loss,val_loss,val_accuracy,wall_seconds\n";
    char buf[192];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.3f\n", e.epoch,
                      static_cast<double>(e.train_loss), static_cast<double>(e.val_loss),
                      static_cast<double>(e.val_accuracy), timing ? e.wall_seconds : 0.0);
        out << buf;
    }
}

void save_confusion_csv(const std::string& path, const ConfusionMatrix& cm,
                        const std::vector<std::string>& genres) {
    if (genres.size() != cm.classes) {
        throw DimensionError("confusion: " + std::to_string(genres.size()) + " genre names for " +
                             std::to_string(cm.classes) + " classes");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("confusion: cannot write " + path);
    out << "genre";
    for (const auto& g : genres) out << "," << g;
    out << "\n";
    for (std::size_t truth = 0; truth < cm.classes; ++truth) {
        out << genres[truth];
        for (std::size_t pred = 0; pred < cm.classes; ++pred) out << "," << cm.at(truth, pred);
        out << "\n";
    }
}

}  // namespace lyricnet
