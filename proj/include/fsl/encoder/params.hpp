#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsl/common/types.hpp"
#include "fsl/numerics/tensor.hpp"

namespace fsl::encoder {

using numerics::Tensor;
using numerics::TensorMap;

enum class BackboneKind { gru, attention };

std::string_view to_string(BackboneKind kind);
BackboneKind parse_backbone(std::string_view text);

inline constexpr std::size_t kMaxSeqLen = 50;

struct ModelDims {
    std::size_t n_items = 0; // M; the embedding table has M + 1 rows
    std::size_t dim = 32;
    std::size_t max_len = kMaxSeqLen;

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Tensor slot names. Checkpoints and the aggregator only ever see these.
namespace slot {
inline constexpr const char* item_embeddings = "item_embeddings";
inline constexpr const char* gru_w_z = "gru.W_z";
inline constexpr const char* gru_w_r = "gru.W_r";
inline constexpr const char* gru_w_h = "gru.W_h";
inline constexpr const char* gru_u_z = "gru.U_z";
inline constexpr const char* gru_u_r = "gru.U_r";
inline constexpr const char* gru_u_h = "gru.U_h";
inline constexpr const char* gru_b_z = "gru.b_z";
inline constexpr const char* gru_b_r = "gru.b_r";
inline constexpr const char* gru_b_h = "gru.b_h";
inline constexpr const char* attn_w_q = "attn.W_q";
inline constexpr const char* attn_w_k = "attn.W_k";
inline constexpr const char* attn_w_v = "attn.W_v";
inline constexpr const char* attn_w_o = "attn.W_o";
inline constexpr const char* attn_positional = "attn.positional";
} // namespace slot

struct InitConfig {
    double embedding_std = 0.1;
    // Square weight matrices use std = weight_gain / sqrt(d).
    double weight_gain = 1.0;
    double positional_std = 0.02;
};

// All trainable weights of the backbone. Only the active backbone's tensors
// are present, plus the weight-tied item embedding table whose last row is
// the zero padding row.
class ParamSet {
  public:
    ParamSet() = default;

    static ParamSet initialize(BackboneKind kind, const ModelDims& dims, std::uint64_t seed,
                               const InitConfig& init = {});
    static ParamSet zeros(BackboneKind kind, const ModelDims& dims);

    // Rebuilds a ParamSet from named tensors, inferring backbone and dims.
    // Throws DimensionError on missing/inconsistent slots.
    static ParamSet from_tensors(TensorMap tensors);

    [[nodiscard]] BackboneKind kind() const noexcept { return kind_; }
    [[nodiscard]] const ModelDims& dims() const noexcept { return dims_; }
    [[nodiscard]] ItemId padding_id() const noexcept { return static_cast<ItemId>(dims_.n_items); }

    [[nodiscard]] const TensorMap& tensors() const noexcept { return tensors_; }
    [[nodiscard]] TensorMap& tensors() noexcept { return tensors_; }
    [[nodiscard]] const Tensor& at(const std::string& name) const;
    [[nodiscard]] Tensor& at(const std::string& name);

    [[nodiscard]] std::size_t parameter_count() const;
    [[nodiscard]] bool same_layout(const ParamSet& other) const;

    friend bool operator==(const ParamSet&, const ParamSet&) = default;

  private:
    ParamSet(BackboneKind kind, const ModelDims& dims, TensorMap tensors);

    BackboneKind kind_ = BackboneKind::attention;
    ModelDims dims_;
    TensorMap tensors_;
};

// S_u: a user's time-ordered item history.
struct InteractionSequence {
    std::string user_id;
    ItemList items;
    std::optional<std::vector<std::int64_t>> timestamps;
};

} // namespace fsl::encoder
