#include "lyricnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace lyricnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as native little-endian scalars");

namespace {

constexpr char kMagic[4] = {'L', 'Y', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
    return json{{"kind", to_string(c.kind)},
                {"granularity", c.granularity == Granularity::line ? "line" : "segment"},
                {"max_units", c.max_units},
                {"max_unit_words", c.max_unit_words},
                {"max_song_words", c.max_song_words},
                {"hidden", c.hidden},
                {"attention", c.attention},
                {"embed_dim", c.embed_dim},
                {"classes", c.classes},
                {"vocab_size", c.vocab_size},
                {"dropout_p", c.dropout_p},
                {"train_embeddings", c.train_embeddings},
                // fixed by the implementation, recorded for reproducibility
                {"init", "uniform-sqrt6-fan"},
                {"oov_init", "uniform(-0.05,0.05)"},
                {"dropout_placement", "embeddings,layer-outputs,pre-softmax"}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    c.granularity = j.at("granularity").get<std::string>() == "segment" ? Granularity::segment
                                                                        : Granularity::line;
    c.max_units = j.at("max_units").get<std::size_t>();
    c.max_unit_words = j.at("max_unit_words").get<std::size_t>();
    c.max_song_words = j.at("max_song_words").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.attention = j.at("attention").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.dropout_p = static_cast<Real>(j.at("dropout_p").get<double>());
    c.train_embeddings = j.at("train_embeddings").get<bool>();
    return c;
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("checkpoint: truncated file");
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw ParseError("checkpoint: truncated string");
    return s;
}

}  // namespace

Checkpoint snapshot(Classifier& model, const Vocabulary& vocab,
                    const std::vector<std::string>& genres, std::uint64_t seed,
                    const std::vector<EpochStats>& history) {
    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.genres = genres;
    ckpt.vocab = vocab;
    ckpt.seed = seed;
    ckpt.history = history;
    if (auto* mc = dynamic_cast<MajorityClassifier*>(&model)) {
        ckpt.majority_id = mc->majority_id();
    }
    for (Parameter* p : model.parameters()) ckpt.tensors.emplace_back(p->name, p->value);
    return ckpt;
}

std::unique_ptr<Classifier> restore(const Checkpoint& ckpt) {
    if (ckpt.config.kind == ModelKind::mc) {
        return std::make_unique<MajorityClassifier>(ckpt.config, ckpt.majority_id);
    }
    auto model = make_classifier(ckpt.config, ckpt.seed);
    auto params = model->parameters();
    if (params.size() != ckpt.tensors.size()) {
        throw ParseError("checkpoint: expected " + std::to_string(params.size()) +
                         " tensors, found " + std::to_string(ckpt.tensors.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, tensor] = ckpt.tensors[i];
        if (params[i]->name != name) {
            throw ParseError("checkpoint: tensor '" + name + "' does not match parameter '" +
                             params[i]->name + "'");
        }
        if (!params[i]->value.same_shape(tensor)) {
            throw ParseError("checkpoint: tensor '" + name + "' shape " + tensor.shape_str() +
                             " does not match " + params[i]->value.shape_str());
        }
        params[i]->value = tensor;
    }
    return model;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("checkpoint: cannot write " + tmp);

        out.write(kMagic, 4);
        write_pod<std::uint32_t>(out, kVersion);

        json header{{"config", config_to_json(ckpt.config)},
                    {"genres", ckpt.genres},
                    {"seed", ckpt.seed},
                    {"majority_id", ckpt.majority_id},
                    {"dtype", sizeof(Real) == 8 ? "f64" : "f32"},
                    {"vocab_count", ckpt.vocab.size()},
                    {"tensor_count", ckpt.tensors.size()}};
        json hist = json::array();
        for (const auto& e : ckpt.history) {
            hist.push_back({{"epoch", e.epoch},
                            {"train_loss", e.train_loss},
                            {"val_loss", e.val_loss},
                            {"val_accuracy", e.val_accuracy},
                            {"wall_seconds", e.wall_seconds}});
        }
        header["history"] = hist;
        write_string(out, header.dump());

        for (const auto& token : ckpt.vocab.tokens()) write_string(out, token);

        for (const auto& [name, tensor] : ckpt.tensors) {
            write_string(out, name);
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
            for (std::size_t d : tensor.shape()) write_pod<std::uint64_t>(out, d);
            out.write(reinterpret_cast<const char*>(tensor.data().data()),
                      static_cast<std::streamsize>(tensor.size() * sizeof(Real)));
        }
        if (!out) throw ParseError("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("checkpoint: cannot read " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError("checkpoint: bad magic in " + path);
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) {
        throw ParseError("checkpoint: unsupported version " + std::to_string(version));
    }

    json header;
    try {
        header = json::parse(read_string(in));
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: bad header: ") + e.what());
    }
    const std::string dtype = header.at("dtype").get<std::string>();
    const std::string expected = sizeof(Real) == 8 ? "f64" : "f32";
    if (dtype != expected) {
        throw ConfigError("checkpoint: stored as " + dtype + " but this build uses " + expected);
    }

    Checkpoint ckpt;
    ckpt.config = config_from_json(header.at("config"));
    ckpt.genres = header.at("genres").get<std::vector<std::string>>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.majority_id = header.at("majority_id").get<int>();
    for (const auto& e : header.at("history")) {
        EpochStats s;
        s.epoch = e.at("epoch").get<std::size_t>();
        s.train_loss = static_cast<Real>(e.at("train_loss").get<double>());
        s.val_loss = static_cast<Real>(e.at("val_loss").get<double>());
        s.val_accuracy = static_cast<Real>(e.at("val_accuracy").get<double>());
        s.wall_seconds = e.at("wall_seconds").get<double>();
        ckpt.history.push_back(s);
    }

    const auto vocab_count = header.at("vocab_count").get<std::size_t>();
    Vocabulary vocab;
    for (std::size_t i = 0; i < vocab_count; ++i) {
        const std::string token = read_string(in);
        if (i == 0 || i == 1) continue;  // reserved entries are fixed
        vocab.add(token);
    }
    ckpt.vocab = std::move(vocab);

    const auto tensor_count = header.at("tensor_count").get<std::size_t>();
    for (std::size_t i = 0; i < tensor_count; ++i) {
        const std::string name = read_string(in);
        const auto rank = read_pod<std::uint32_t>(in);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
        Tensor tensor(shape);
        in.read(reinterpret_cast<char*>(tensor.data().data()),
                static_cast<std::streamsize>(tensor.size() * sizeof(Real)));
        if (!in) throw ParseError("checkpoint: truncated tensor '" + name + "'");
        ckpt.tensors.emplace_back(name, std::move(tensor));
    }
    return ckpt;
}

}  // namespace lyricnet
