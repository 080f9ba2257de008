#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lyricnet/checkpoint.hpp"
#include "lyricnet/models.hpp"

namespace lyricnet {

struct TrainConfig {
    std::size_t batch_size = 64;
    Real learning_rate = Real(0.01);
    Real rmsprop_decay = Real(0.9);
    Real rmsprop_epsilon = Real(1e-8);
    Real dropout_p = Real(0.5);
    Real clip_norm = Real(1);
    std::size_t patience = 3;   // 0 disables early stopping
    std::uint64_t seed = 0;
    std::size_t max_epochs = 50;
    bool timing = false;        // real wall_seconds in the history; off keeps outputs byte-stable

    void validate() const;
};

struct ConfusionMatrix {
    std::size_t classes = 0;
    std::vector<std::int64_t> counts;  // row = true genre, column = predicted

    explicit ConfusionMatrix(std::size_t c = 0) : classes(c), counts(c * c, 0) {}
    std::int64_t& at(std::size_t truth, std::size_t pred) { return counts[truth * classes + pred]; }
    std::int64_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes + pred]; }
    std::int64_t total() const;
    std::int64_t row_sum(std::size_t truth) const;
    std::int64_t diagonal() const;
};

struct EvalResult {
    double accuracy = 0;
    Real mean_loss = 0;  // per-song mean of Eq-style negative log likelihood
    ConfusionMatrix confusion;
};

struct TrainResult {
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;  // 1-based; 0 when nothing trained
    bool diverged = false;
};

// batch loss: sum over songs of -log p[label], computed from logits via log-softmax
Var cross_entropy(Tape& tape, const std::vector<Var>& logits, const std::vector<int>& labels);

// numeric counterpart used for validation/eval scoring
Real nll_from_logits(const Tensor& logits, int label);

// global-norm clipping across every gradient; returns the pre-clip norm
Real clip_gradients(const std::vector<Parameter*>& params, Real max_norm);

class RmsProp {
  public:
    RmsProp(Real learning_rate, Real decay, Real epsilon)
        : lr_(learning_rate), decay_(decay), epsilon_(epsilon) {}

    void step(const std::vector<Parameter*>& params);

  private:
    Real lr_, decay_, epsilon_;
    std::unordered_map<Parameter*, Tensor> cache_;
};

// stop once the validation loss has failed to improve for `patience` consecutive
// epochs; the checkpoint to keep is the best (lowest) one, earliest epoch on ties
class EarlyStopping {
  public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    // feeds one epoch's validation loss; returns true when training should stop
    bool feed(Real val_loss);
    std::size_t best_epoch() const { return best_epoch_; }
    Real best_loss() const { return best_loss_; }

  private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    Real best_loss_ = 0;
    std::size_t streak_ = 0;
};

// full optimization loop: seeded shuffles, batches of cfg.batch_size (final partial
// batch kept), backward, global clip, rmsprop, early stopping on validation loss.
// The model is left holding its best-validation-loss parameters.
TrainResult train(Classifier& model, const std::vector<Song>& train_songs,
                  const std::vector<Song>& val_songs, const TrainConfig& cfg,
                  bool verbose = false);

EvalResult evaluate(Classifier& model, const std::vector<Song>& songs, unsigned threads = 1);

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history, bool timing);

void save_confusion_csv(const std::string& path, const ConfusionMatrix& cm,
                        const std::vector<std::string>& genres);

}  // namespace lyricnet
