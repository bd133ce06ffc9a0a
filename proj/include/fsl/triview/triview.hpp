#pragma once

#include <optional>
#include <string_view>

#include "fsl/numerics/tape.hpp"
#include "fsl/numerics/tensor.hpp"

namespace fsl::triview {

using numerics::Tensor;
using numerics::Var;

enum class Similarity { cosine, dot };

std::string_view to_string(Similarity sim);
Similarity parse_similarity(std::string_view text);

// Which view terms take part in the loss. Dropping a positive removes its
// term from the positive partition; dropping the negative sets the negative
// partition to zero.
struct ViewMask {
    bool future = true;
    bool paraphrase = true;
    bool counterfactual = true;

    friend bool operator==(const ViewMask&, const ViewMask&) = default;
};

struct ContrastiveConfig {
    double tau = 0.07;
    Similarity similarity = Similarity::cosine;
    ViewMask views;
    // Treat view encodings as constants (gradient only reaches the anchor).
    bool stop_gradient_views = false;
};

// h_u and the three view encodings, all from one ParamSet.
struct ViewEmbeddings {
    Tensor anchor;
    Tensor future;
    Tensor paraphrase;
    Tensor counterfactual;
    double tau = 0.07;
    double lambda_cl = 0.1;
};

// exp(sim(anchor, future)/tau) + exp(sim(anchor, paraphrase)/tau)
double pos_partition(const ViewEmbeddings& v, Similarity sim = Similarity::cosine);

// exp(sim(anchor, counterfactual)/tau)
double neg_partition(const ViewEmbeddings& v, Similarity sim = Similarity::cosine);

// -log(pos / (pos + neg)), evaluated in log space.
double triview_loss(const ViewEmbeddings& v, Similarity sim = Similarity::cosine);

// Tape version. Views that are masked out may be passed as std::nullopt.
Var triview_loss(Var anchor, std::optional<Var> future, std::optional<Var> paraphrase,
                 std::optional<Var> counterfactual, const ContrastiveConfig& cfg);

// L_u = L_rec + lambda_cl * L_cl
double local_objective(double rec_loss, double cl_loss, double lambda_cl);
Var local_objective(Var rec_loss, Var cl_loss, double lambda_cl);

} // namespace fsl::triview
