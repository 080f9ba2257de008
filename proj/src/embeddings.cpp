#include "lyricnet/embeddings.hpp"

#include <fstream>
#include <sstream>

namespace lyricnet {

Var EmbeddingMatrix::lookup(Tape& tape, const std::vector<int>& ids) {
    Var t = trainable ? tape.param(table) : tape.constant(table.value);
    return tape.embed_rows(t, ids);
}

void EmbeddingMatrix::zero_pad_row() {
    const std::size_t d = dim();
    for (std::size_t c = 0; c < d; ++c) table.value[c] = Real(0);
}

namespace {

void fill_random_rows(Tensor& t, std::size_t first_row, Rng& rng) {
    const std::size_t d = t.cols();
    for (std::size_t r = first_row; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            t.at(r, c) = static_cast<Real>(rng.uniform(-0.05, 0.05));
        }
    }
}

}  // namespace

EmbeddingMatrix init_embeddings(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
    Tensor table({vocab_size, dim});
    Rng rng(derive_seed(seed, 0x656d62ULL));
    fill_random_rows(table, 1, rng);  // PAD row stays zero
    EmbeddingMatrix e;
    e.table = Parameter("embedding", std::move(table));
    return e;
}

EmbeddingMatrix load_glove(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                           std::uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("glove: cannot read " + path);

    EmbeddingMatrix e = init_embeddings(vocab.size(), dim, seed);
    Tensor& table = e.table.value;

    std::string line;
    std::size_t lineno = 0;
    std::vector<char> assigned(vocab.size(), 0);
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        std::vector<Real> values;
        double v;
        while (ls >> v) values.push_back(static_cast<Real>(v));
        if (!ls.eof()) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed vector line");
        }
        if (values.size() != dim) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": vector dimension " +
                              std::to_string(values.size()) + " does not match configured " +
                              std::to_string(dim));
        }
        const int id = vocab.id_of(token);
        if (id == Vocabulary::kUnkId || id == Vocabulary::kPadId) continue;  // not a vocab token
        for (std::size_t c = 0; c < dim; ++c) table.at(static_cast<std::size_t>(id), c) = values[c];
        assigned[static_cast<std::size_t>(id)] = 1;
    }
    std::size_t found = 0;
    for (char a : assigned) found += static_cast<std::size_t>(a);
    const std::size_t real_tokens = vocab.size() - 2;
    e.coverage = real_tokens == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(real_tokens);
    return e;
}

}  // namespace lyricnet
