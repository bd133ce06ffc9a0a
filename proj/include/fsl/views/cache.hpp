#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "fsl/common/types.hpp"
#include "fsl/views/views.hpp"

namespace fsl::views {

std::string sha256_hex(std::string_view data);

// SHA-256 over the version tag, the config digest and the anchor ids.
std::string cache_key(std::string_view version_tag, std::string_view config_digest,
                      std::span<const ItemId> anchor);

// Append-only JSONL store of generated triples. Existing records are loaded
// at construction (a later record for the same key wins); appends from any
// thread are serialized.
class ViewCache {
  public:
    explicit ViewCache(std::filesystem::path path);

    [[nodiscard]] std::optional<ViewTriple> get(const std::string& key) const;
    void put(const std::string& key, const ViewTriple& triple);

    // Cached triple with every provenance set to cache, or the freshly
    // generated (and stored) one.
    ViewTriple get_or_generate(const std::string& key, const std::function<ViewTriple()>& generate);

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t skipped_lines() const noexcept { return skipped_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

  private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, ViewTriple> entries_;
    std::size_t skipped_ = 0;
};

} // namespace fsl::views
