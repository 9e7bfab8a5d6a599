#pragma once
// Checkpoint file format:
//   magic "KKGECKPT", u32 version,
//   u64 metadata length + metadata (UTF-8 key=value lines: variant, d,
//     entities, relations, epoch, loss, alpha, seed, lr, batch, adam_step,
//     reciprocal, noise_fraction, followed by one entity=<name> line per
//     entity and one relation=<name> line per relation in index order),
//   raw little-endian IEEE-754 doubles in declared order:
//     E, R, bn gamma/beta per layer, bn running mean/var per layer,
//     Adam m (E, R, gamma/beta per layer), Adam v (same order),
//   trailing u64 FNV-1a checksum of all preceding bytes.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "kkge/adam.hpp"
#include "kkge/dataset.hpp"
#include "kkge/errors.hpp"
#include "kkge/losses.hpp"
#include "kkge/model.hpp"

namespace kkge {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'K', 'K', 'G', 'E', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelState model;
    AdamState adam;
    Vocabulary vocab;
    int epoch = 0;
    LossSpec loss;
    std::uint64_t seed = 1;
    double lr = 0.01;
    int batch_size = 1024;
    bool reciprocal = false;
    double noise_fraction = 0.0;
};

namespace detail {

inline void write_tensor(Writer& w, const Vec& v) { w.write(v.data(), v.size() * sizeof(double)); }
inline void read_tensor(Reader& r, Vec& v) { r.read(v.data(), v.size() * sizeof(double)); }

// Round-trip exact double formatting for the metadata block.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    detail::Writer w(path);
    w.write(kCheckpointMagic, sizeof kCheckpointMagic);
    w.write_u32(kCheckpointVersion);

    std::string meta;
    auto put = [&meta](const std::string& k, const std::string& v) { meta += k + "=" + v + "\n"; };
    put("variant", variant_name(ckpt.model.variant));
    put("d", std::to_string(ckpt.model.d));
    put("entities", std::to_string(ckpt.model.num_entities()));
    put("relations", std::to_string(ckpt.model.num_relations()));
    put("epoch", std::to_string(ckpt.epoch));
    put("loss", loss_name(ckpt.loss.kind));
    put("alpha", detail::format_full(ckpt.loss.alpha));
    put("seed", std::to_string(ckpt.seed));
    put("lr", detail::format_full(ckpt.lr));
    put("batch", std::to_string(ckpt.batch_size));
    put("adam_step", std::to_string(ckpt.adam.step));
    put("reciprocal", ckpt.reciprocal ? "1" : "0");
    put("noise_fraction", detail::format_full(ckpt.noise_fraction));
    for (const auto& e : ckpt.vocab.entity_names()) put("entity", e);
    for (const auto& r : ckpt.vocab.relation_names()) put("relation", r);
    w.write_u64(meta.size());
    w.write(meta.data(), meta.size());

    detail::write_tensor(w, ckpt.model.E.a);
    detail::write_tensor(w, ckpt.model.R.a);
    for (const BatchNorm& bn : ckpt.model.bn) {
        detail::write_tensor(w, bn.gamma);
        detail::write_tensor(w, bn.beta);
    }
    for (const BatchNorm& bn : ckpt.model.bn) {
        detail::write_tensor(w, bn.running_mean);
        detail::write_tensor(w, bn.running_var);
    }
    detail::write_tensor(w, ckpt.adam.mE.a);
    detail::write_tensor(w, ckpt.adam.mR.a);
    for (std::size_t l = 0; l < ckpt.adam.m_gamma.size(); ++l) {
        detail::write_tensor(w, ckpt.adam.m_gamma[l]);
        detail::write_tensor(w, ckpt.adam.m_beta[l]);
    }
    detail::write_tensor(w, ckpt.adam.vE.a);
    detail::write_tensor(w, ckpt.adam.vR.a);
    for (std::size_t l = 0; l < ckpt.adam.v_gamma.size(); ++l) {
        detail::write_tensor(w, ckpt.adam.v_gamma[l]);
        detail::write_tensor(w, ckpt.adam.v_beta[l]);
    }
    w.finish();
}

inline Checkpoint load_checkpoint(const std::string& path) {
    detail::Reader r(path);
    char magic[8];
    r.read(magic, sizeof magic);
    if (!std::equal(magic, magic + 8, kCheckpointMagic))
        throw FileFormatError("not a checkpoint file: " + path);
    const std::uint32_t version = r.read_u32();
    if (version != kCheckpointVersion)
        throw FileVersionError("unsupported checkpoint version " + std::to_string(version) +
                               " in " + path);

    const std::uint64_t meta_len = r.read_u64();
    if (meta_len > (1ull << 30)) throw FileFormatError("implausible metadata size in " + path);
    std::string meta(meta_len, '\0');
    r.read(meta.data(), meta_len);

    std::map<std::string, std::string> kv;
    std::vector<std::string> entities, relations;
    std::size_t pos = 0;
    while (pos < meta.size()) {
        std::size_t nl = meta.find('\n', pos);
        if (nl == std::string::npos) nl = meta.size();
        const std::string line = meta.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw FileFormatError("bad metadata line in " + path);
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "entity")
            entities.push_back(value);
        else if (key == "relation")
            relations.push_back(value);
        else
            kv[key] = value;
    }
    auto need = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw FileFormatError("missing metadata key '" + k + "' in " + path);
        return it->second;
    };

    Checkpoint ckpt;
    const Variant variant = variant_from_name(need("variant"));
    const int d = std::stoi(need("d"));
    const auto n_ent = static_cast<std::int32_t>(std::stol(need("entities")));
    const auto n_rel = static_cast<std::int32_t>(std::stol(need("relations")));
    if (static_cast<std::size_t>(n_ent) != entities.size() ||
        static_cast<std::size_t>(n_rel) != relations.size())
        throw FileFormatError("vocabulary count mismatch in " + path);
    ckpt.epoch = std::stoi(need("epoch"));
    ckpt.loss.kind = loss_from_name(need("loss"));
    ckpt.loss.alpha = std::stod(need("alpha"));
    ckpt.seed = std::stoull(need("seed"));
    ckpt.lr = std::stod(need("lr"));
    ckpt.batch_size = std::stoi(need("batch"));
    ckpt.reciprocal = need("reciprocal") == "1";
    ckpt.noise_fraction = std::stod(need("noise_fraction"));
    for (const auto& e : entities) ckpt.vocab.intern_entity(e);
    for (const auto& rl : relations) ckpt.vocab.intern_relation(rl);

    ckpt.model = init(variant, d, n_ent, n_rel, /*seed=*/0);
    ckpt.adam = AdamState::for_model(ckpt.model, ckpt.lr);
    ckpt.adam.step = std::stoll(need("adam_step"));

    detail::read_tensor(r, ckpt.model.E.a);
    detail::read_tensor(r, ckpt.model.R.a);
    for (BatchNorm& bn : ckpt.model.bn) {
        detail::read_tensor(r, bn.gamma);
        detail::read_tensor(r, bn.beta);
    }
    for (BatchNorm& bn : ckpt.model.bn) {
        detail::read_tensor(r, bn.running_mean);
        detail::read_tensor(r, bn.running_var);
    }
    detail::read_tensor(r, ckpt.adam.mE.a);
    detail::read_tensor(r, ckpt.adam.mR.a);
    for (std::size_t l = 0; l < ckpt.adam.m_gamma.size(); ++l) {
        detail::read_tensor(r, ckpt.adam.m_gamma[l]);
        detail::read_tensor(r, ckpt.adam.m_beta[l]);
    }
    detail::read_tensor(r, ckpt.adam.vE.a);
    detail::read_tensor(r, ckpt.adam.vR.a);
    for (std::size_t l = 0; l < ckpt.adam.v_gamma.size(); ++l) {
        detail::read_tensor(r, ckpt.adam.v_gamma[l]);
        detail::read_tensor(r, ckpt.adam.v_beta[l]);
    }
    r.check_digest();
    return ckpt;
}

}  // namespace kkge
