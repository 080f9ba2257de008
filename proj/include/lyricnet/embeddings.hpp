#pragma once

#include <string>

#include "lyricnet/corpus.hpp"
#include "lyricnet/tape.hpp"

namespace lyricnet {

// word embedding table, row per vocabulary id; PAD row stays zero for the whole
// lifetime of the model (re-zeroed after every optimizer step)
struct EmbeddingMatrix {
    Parameter table;  // {V, d}
    bool trainable = true;
    double coverage = 0.0;  // fraction of non-reserved vocab tokens found in the vector file

    std::size_t vocab_size() const { return table.value.rows(); }
    std::size_t dim() const { return table.value.cols(); }

    // gathers rows for the given ids -> {n, d}
    Var lookup(Tape& tape, const std::vector<int>& ids);

    void zero_pad_row();
};

// random-initialized table (uniform(-0.05, 0.05), PAD row zero), used when no
// pretrained vector file is supplied
EmbeddingMatrix init_embeddings(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

// loads word vectors in the plain text format "token v1 ... vd", one per line.
// Vocabulary tokens missing from the file (and UNK) get uniform(-0.05, 0.05) rows.
EmbeddingMatrix load_glove(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                           std::uint64_t seed);

}  // namespace lyricnet
