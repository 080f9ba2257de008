#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lyricnet/corpus.hpp"
#include "lyricnet/models.hpp"

namespace lyricnet {

struct EpochStats {
    std::size_t epoch = 0;
    Real train_loss = 0;     // per-song mean over the epoch
    Real val_loss = 0;       // per-song mean
    Real val_accuracy = 0;
    double wall_seconds = 0;
};

// everything needed to rebuild a trained model: architecture config, vocabulary,
// genre list, parameter tensors, seed metadata, training history
struct Checkpoint {
    ModelConfig config;
    std::vector<std::string> genres;
    Vocabulary vocab;
    std::uint64_t seed = 0;
    int majority_id = -1;  // mc only
    std::vector<EpochStats> history;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

Checkpoint snapshot(Classifier& model, const Vocabulary& vocab,
                    const std::vector<std::string>& genres, std::uint64_t seed,
                    const std::vector<EpochStats>& history);

// rebuilds the classifier and overwrites its parameters from the stored tensors
std::unique_ptr<Classifier> restore(const Checkpoint& ckpt);

// versioned binary container; tensor payloads are raw little-endian scalars in the
// build's precision (recorded in the header). Written to a temp file then renamed,
// so an interrupted save never leaves a torn checkpoint behind.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lyricnet
