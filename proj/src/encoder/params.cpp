#include "fsl/encoder/params.hpp"

#include <cmath>

#include "fsl/common/errors.hpp"
#include "fsl/common/rng.hpp"

namespace fsl::encoder {
namespace {

const char* const kGruSquare[] = {slot::gru_w_z, slot::gru_w_r, slot::gru_w_h,
                                  slot::gru_u_z, slot::gru_u_r, slot::gru_u_h};
const char* const kGruBias[] = {slot::gru_b_z, slot::gru_b_r, slot::gru_b_h};
const char* const kAttnSquare[] = {slot::attn_w_q, slot::attn_w_k, slot::attn_w_v, slot::attn_w_o};

Tensor gaussian(numerics::Shape shape, double std, rng::Engine& eng) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = std * rng::normal(eng);
    }
    return t;
}

void expect_shape(const TensorMap& m, const char* name, const numerics::Shape& shape) {
    const auto it = m.find(name);
    if (it == m.end()) {
        throw DimensionError(std::string("parameter set is missing '") + name + "'");
    }
    if (it->second.shape() != shape) {
        throw DimensionError(std::string("parameter '") + name + "' has shape " +
                             numerics::shape_to_string(it->second.shape()) + ", expected " +
                             numerics::shape_to_string(shape));
    }
}

} // namespace

std::string_view to_string(BackboneKind kind) {
    return kind == BackboneKind::gru ? "gru" : "attention";
}

BackboneKind parse_backbone(std::string_view text) {
    if (text == "gru") {
        return BackboneKind::gru;
    }
    if (text == "attention" || text == "sasrec") {
        return BackboneKind::attention;
    }
    throw ConfigError("unknown backbone '" + std::string(text) + "' (expected gru|attention)");
}

ParamSet::ParamSet(BackboneKind kind, const ModelDims& dims, TensorMap tensors)
    : kind_(kind), dims_(dims), tensors_(std::move(tensors)) {}

ParamSet ParamSet::initialize(BackboneKind kind, const ModelDims& dims, std::uint64_t seed, const InitConfig& init) {
    if (dims.n_items == 0 || dims.dim == 0 || dims.max_len == 0) {
        throw ConfigError("model dims must be positive");
    }
    auto eng = rng::make_engine(rng::derive({seed, 0x1417ULL}));
    const std::size_t d = dims.dim;
    const double wstd = init.weight_gain / std::sqrt(static_cast<double>(d));
    TensorMap m;
    Tensor emb = gaussian({dims.n_items + 1, d}, init.embedding_std, eng);
    for (double& v : emb.row(dims.n_items)) {
        v = 0.0;
    }
    m.emplace(slot::item_embeddings, std::move(emb));
    if (kind == BackboneKind::gru) {
        for (const char* name : kGruSquare) {
            m.emplace(name, gaussian({d, d}, wstd, eng));
        }
        for (const char* name : kGruBias) {
            m.emplace(name, Tensor({d}));
        }
    } else {
        for (const char* name : kAttnSquare) {
            m.emplace(name, gaussian({d, d}, wstd, eng));
        }
        m.emplace(slot::attn_positional, gaussian({dims.max_len, d}, init.positional_std, eng));
    }
    return ParamSet(kind, dims, std::move(m));
}

ParamSet ParamSet::zeros(BackboneKind kind, const ModelDims& dims) {
    ParamSet p = initialize(kind, dims, 0);
    for (auto& [name, t] : p.tensors_) {
        std::fill(t.data().begin(), t.data().end(), 0.0);
    }
    return p;
}

ParamSet ParamSet::from_tensors(TensorMap tensors) {
    const auto emb = tensors.find(slot::item_embeddings);
    if (emb == tensors.end() || emb->second.rank() != 2 || emb->second.rows() < 2) {
        throw DimensionError("parameter set has no valid item_embeddings table");
    }
    ModelDims dims;
    dims.n_items = emb->second.rows() - 1;
    dims.dim = emb->second.cols();
    const std::size_t d = dims.dim;
    BackboneKind kind;
    if (tensors.contains(slot::gru_w_z)) {
        kind = BackboneKind::gru;
        for (const char* name : kGruSquare) {
            expect_shape(tensors, name, {d, d});
        }
        for (const char* name : kGruBias) {
            expect_shape(tensors, name, {d});
        }
        if (tensors.size() != 10) {
            throw DimensionError("gru parameter set has unexpected extra tensors");
        }
    } else {
        kind = BackboneKind::attention;
        for (const char* name : kAttnSquare) {
            expect_shape(tensors, name, {d, d});
        }
        const auto pos = tensors.find(slot::attn_positional);
        if (pos == tensors.end() || pos->second.rank() != 2 || pos->second.cols() != d) {
            throw DimensionError("attention parameter set has no valid positional table");
        }
        dims.max_len = pos->second.rows();
        if (tensors.size() != 6) {
            throw DimensionError("attention parameter set has unexpected extra tensors");
        }
    }
    return ParamSet(kind, dims, std::move(tensors));
}

const Tensor& ParamSet::at(const std::string& name) const {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) {
        throw IndexError("no parameter named '" + name + "'");
    }
    return it->second;
}

Tensor& ParamSet::at(const std::string& name) {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) {
        throw IndexError("no parameter named '" + name + "'");
    }
    return it->second;
}

std::size_t ParamSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors_) {
        n += t.size();
    }
    return n;
}

bool ParamSet::same_layout(const ParamSet& other) const {
    if (kind_ != other.kind_ || !(dims_ == other.dims_) || tensors_.size() != other.tensors_.size()) {
        return false;
    }
    auto a = tensors_.begin();
    auto b = other.tensors_.begin();
    for (; a != tensors_.end(); ++a, ++b) {
        if (a->first != b->first || a->second.shape() != b->second.shape()) {
            return false;
        }
    }
    return true;
}

} // namespace fsl::encoder
