#include "longmatch/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "longmatch/errors.hpp"

namespace longmatch {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr std::array<char, 4> kMagic{'M', 'I', 'G', 'N'};

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError("truncated checkpoint header");
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json tensors = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : ckpt.weights.named_tensors()) {
        tensors.push_back({{"name", name}, {"shape", {t->rows(), t->cols()}}, {"offset", offset}});
        offset += static_cast<std::uint64_t>(t->size()) * sizeof(float);
    }
    const nlohmann::json manifest = {{"format", "f32-le-row-major"},
                                     {"config", to_json(ckpt.config)},
                                     {"vocab", ckpt.vocab.tokens()},
                                     {"pipeline", ckpt.pipeline},
                                     {"tensors", std::move(tensors)}};
    const std::string text = manifest.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write checkpoint " + path.string());
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::vector<float> buf;
    for (const auto& [name, t] : ckpt.weights.named_tensors()) {
        buf.resize(static_cast<std::size_t>(t->size()));
        std::size_t k = 0;
        for (Eigen::Index i = 0; i < t->rows(); ++i)
            for (Eigen::Index j = 0; j < t->cols(); ++j) buf[k++] = static_cast<float>((*t)(i, j));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw InternalError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint " + path.string());
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw InputError(path.string() + " is not a checkpoint (bad magic)");
    const auto version = get_u32(in);
    if (version != kCheckpointVersion)
        throw InputError("unsupported checkpoint version " + std::to_string(version));
    const auto manifest_len = get_u32(in);
    std::string text(manifest_len, '\0');
    if (!in.read(text.data(), manifest_len)) throw InputError("truncated checkpoint manifest");

    Checkpoint ckpt;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
        ckpt.config = model_config_from_json(manifest.at("config"));
        auto tokens = manifest.at("vocab").get<std::vector<std::string>>();
        if (tokens.size() < Vocab::kSpecialCount) throw InputError("checkpoint vocabulary too small");
        ckpt.vocab = Vocab(std::vector<std::string>(tokens.begin() + Vocab::kSpecialCount, tokens.end()));
        ckpt.pipeline = manifest.value("pipeline", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("bad checkpoint manifest: ") + e.what());
    }

    const auto data_start = in.tellg();
    ckpt.weights = ModelWeights::zeros(ckpt.config);
    auto named = ckpt.weights.named_tensors();
    const auto& entries = manifest.at("tensors");
    if (entries.size() != named.size()) throw InputError("checkpoint tensor count mismatch");
    std::vector<float> buf;
    for (std::size_t k = 0; k < named.size(); ++k) {
        auto& [name, t] = named[k];
        const auto& e = entries[k];
        if (e.at("name").get<std::string>() != name ||
            e.at("shape")[0].get<Eigen::Index>() != t->rows() ||
            e.at("shape")[1].get<Eigen::Index>() != t->cols())
            throw InputError("checkpoint tensor '" + name + "' has unexpected name or shape");
        in.seekg(data_start + static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
        buf.resize(static_cast<std::size_t>(t->size()));
        if (!in.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(buf.size() * sizeof(float))))
            throw InputError("truncated checkpoint data for '" + name + "'");
        std::size_t idx = 0;
        for (Eigen::Index i = 0; i < t->rows(); ++i)
            for (Eigen::Index j = 0; j < t->cols(); ++j) (*t)(i, j) = buf[idx++];
    }
    if (!ckpt.weights.all_finite()) throw InputError("checkpoint contains non-finite weights");
    return ckpt;
}

}  // namespace longmatch
