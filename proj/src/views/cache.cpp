#include "fsl/views/cache.hpp"

#include <array>
#include <fstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"

namespace fsl::views {

namespace {

ItemList ids_from(const nlohmann::json& j) {
    ItemList out;
    for (const auto& v : j) {
        out.push_back(v.get<ItemId>());
    }
    return out;
}

ViewTriple triple_from(const nlohmann::json& j) {
    ViewTriple t;
    t.future = ids_from(j.at("future"));
    t.paraphrase = ids_from(j.at("paraphrase"));
    t.counterfactual = ids_from(j.at("counterfactual"));
    const auto& prov = j.at("provenance");
    if (!prov.is_array() || prov.size() != 3) {
        throw DataError("provenance must list three entries");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        t.provenance[i] = parse_provenance(prov[i].get<std::string>());
    }
    if (t.future.empty() || t.paraphrase.empty() || t.counterfactual.empty()) {
        throw DataError("cached views must be nonempty");
    }
    return t;
}

} // namespace

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string cache_key(std::string_view version_tag, std::string_view config_digest,
                      std::span<const ItemId> anchor) {
    std::string material;
    material.append(version_tag);
    material.push_back('\n');
    material.append(config_digest);
    material.push_back('\n');
    for (const ItemId id : anchor) {
        material.append(std::to_string(id));
        material.push_back(',');
    }
    return sha256_hex(material);
}

ViewCache::ViewCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) {
        return; // starts empty; the file is created on first put
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            entries_[j.at("key").get<std::string>()] = triple_from(j);
        } catch (const std::exception& e) {
            ++skipped_;
            log::warn(path_.string() + ":" + std::to_string(lineno) + ": skipping corrupt cache line (" +
                      e.what() + ")");
        }
    }
}

std::optional<ViewTriple> ViewCache::get(const std::string& key) const {
    const std::lock_guard lock(mu_);
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void ViewCache::put(const std::string& key, const ViewTriple& triple) {
    nlohmann::json prov = nlohmann::json::array();
    for (const Provenance p : triple.provenance) {
        prov.push_back(std::string(to_string(p)));
    }
    const nlohmann::json record = {
        {"key", key},
        {"future", triple.future},
        {"paraphrase", triple.paraphrase},
        {"counterfactual", triple.counterfactual},
        {"provenance", prov},
    };
    const std::lock_guard lock(mu_);
    if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path());
    }
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        throw IoError("cannot append to view cache " + path_.string());
    }
    out << record.dump() << '\n';
    entries_[key] = triple;
}

ViewTriple ViewCache::get_or_generate(const std::string& key, const std::function<ViewTriple()>& generate) {
    if (auto hit = get(key)) {
        hit->provenance.fill(Provenance::cache);
        return *hit;
    }
    ViewTriple fresh = generate();
    put(key, fresh);
    return fresh;
}

std::size_t ViewCache::size() const {
    const std::lock_guard lock(mu_);
    return entries_.size();
}

} // namespace fsl::views
