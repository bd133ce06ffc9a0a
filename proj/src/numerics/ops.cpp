#include "fsl/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsl/common/errors.hpp"

namespace fsl::numerics {
namespace {

Tape& common_tape(Var a, Var b) {
    if (&a.tape() != &b.tape()) {
        throw ContractError("operands live on different tapes");
    }
    return a.tape();
}

bool needs(Var v) { return v.tape().requires_grad(v.id()); }

void require_same_shape(const char* op, Var a, Var b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
}

void require_rank1(const char* op, Var a) {
    if (a.value().rank() != 1) {
        throw DimensionError(std::string(op) + ": expected a vector, got " + shape_to_string(a.shape()));
    }
}

// Elementwise unary op given f(x) and f'(x) expressed through (x, y).
template <class F, class DF>
Var unary(Var a, const char* op, F f, DF df) {
    Tape& t = a.tape();
    const Tensor& x = a.value();
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = f(x[i]);
    }
    if (!needs(a)) {
        return t.record(std::move(y), nullptr, op);
    }
    const std::size_t ia = a.id();
    return t.record(
        std::move(y),
        [ia, df](Tape& tp, const Tensor& out, std::span<const double> g) {
            const Tensor& xv = tp.value(ia);
            auto ga = tp.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * df(xv[i], out[i]);
            }
        },
        op);
}

} // namespace

Var matmul(Var a, Var b) {
    Tape& t = common_tape(a, b);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    const bool vec = av.rank() == 1;
    if ((av.rank() != 1 && av.rank() != 2) || bv.rank() != 2 || av.cols() != bv.rows()) {
        throw DimensionError("matmul: shape mismatch " + shape_to_string(av.shape()) + " x " +
                             shape_to_string(bv.shape()));
    }
    const std::size_t m = av.rows();
    const std::size_t k = av.cols();
    const std::size_t n = bv.cols();
    Tensor c(vec ? Shape{n} : Shape{m, n});
    auto cd = c.data();
    const auto ad = av.data();
    const auto bd = bv.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ad[i * k + p];
            if (aip == 0.0) {
                continue;
            }
            const double* brow = bd.data() + p * n;
            double* crow = cd.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aip * brow[j];
            }
        }
    }
    const bool need_a = needs(a);
    const bool need_b = needs(b);
    if (!need_a && !need_b) {
        return t.record(std::move(c), nullptr, "matmul");
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(
        std::move(c),
        [ia, ib, need_a, need_b, m, k, n](Tape& tp, const Tensor&, std::span<const double> g) {
            const auto ad = tp.value(ia).data();
            const auto bd = tp.value(ib).data();
            if (need_a) {
                // dA = G * B^T
                auto ga = tp.grad(ia);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                            s += g[i * n + j] * bd[p * n + j];
                        }
                        ga[i * k + p] += s;
                    }
                }
            }
            if (need_b) {
                // dB = A^T * G
                auto gb = tp.grad(ib);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        const double aip = ad[i * k + p];
                        if (aip == 0.0) {
                            continue;
                        }
                        for (std::size_t j = 0; j < n; ++j) {
                            gb[p * n + j] += aip * g[i * n + j];
                        }
                    }
                }
            }
        },
        "matmul");
}

Var transpose(Var a) {
    Tape& t = a.tape();
    const Tensor& av = a.value();
    if (av.rank() != 2) {
        throw DimensionError("transpose: expected a matrix, got " + shape_to_string(av.shape()));
    }
    const std::size_t r = av.rows();
    const std::size_t c = av.cols();
    Tensor out(Shape{c, r});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[j * r + i] = av[i * c + j];
        }
    }
    if (!needs(a)) {
        return t.record(std::move(out), nullptr, "transpose");
    }
    const std::size_t ia = a.id();
    return t.record(
        std::move(out),
        [ia, r, c](Tape& tp, const Tensor&, std::span<const double> g) {
            auto ga = tp.grad(ia);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    ga[i * c + j] += g[j * r + i];
                }
            }
        },
        "transpose");
}

Var add(Var a, Var b) {
    Tape& t = common_tape(a, b);
    require_same_shape("add", a, b);
    Tensor out = a.value();
    const auto bd = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += bd[i];
    }
    const bool need_a = needs(a);
    const bool need_b = needs(b);
    if (!need_a && !need_b) {
        return t.record(std::move(out), nullptr, "add");
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(
        std::move(out),
        [ia, ib, need_a, need_b](Tape& tp, const Tensor&, std::span<const double> g) {
            if (need_a) {
                auto ga = tp.grad(ia);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i];
                }
            }
            if (need_b) {
                auto gb = tp.grad(ib);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gb[i] += g[i];
                }
            }
        },
        "add");
}

Var sub(Var a, Var b) {
    Tape& t = common_tape(a, b);
    require_same_shape("sub", a, b);
    Tensor out = a.value();
    const auto bd = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= bd[i];
    }
    const bool need_a = needs(a);
    const bool need_b = needs(b);
    if (!need_a && !need_b) {
        return t.record(std::move(out), nullptr, "sub");
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(
        std::move(out),
        [ia, ib, need_a, need_b](Tape& tp, const Tensor&, std::span<const double> g) {
            if (need_a) {
                auto ga = tp.grad(ia);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i];
                }
            }
            if (need_b) {
                auto gb = tp.grad(ib);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gb[i] -= g[i];
                }
            }
        },
        "sub");
}

Var mul(Var a, Var b) {
    Tape& t = common_tape(a, b);
    require_same_shape("mul", a, b);
    Tensor out = a.value();
    const auto bd = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= bd[i];
    }
    const bool need_a = needs(a);
    const bool need_b = needs(b);
    if (!need_a && !need_b) {
        return t.record(std::move(out), nullptr, "mul");
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(
        std::move(out),
        [ia, ib, need_a, need_b](Tape& tp, const Tensor&, std::span<const double> g) {
            const auto av = tp.value(ia).data();
            const auto bv = tp.value(ib).data();
            if (need_a) {
                auto ga = tp.grad(ia);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * bv[i];
                }
            }
            if (need_b) {
                auto gb = tp.grad(ib);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gb[i] += g[i] * av[i];
                }
            }
        },
        "mul");
}

Var scale(Var a, double factor) {
    return unary(
        a, "scale", [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var sigmoid(Var a) {
    return unary(
        a, "sigmoid",
        [](double x) {
            if (x >= 0.0) {
                return 1.0 / (1.0 + std::exp(-x));
            }
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
    return unary(
        a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
    return unary(
        a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sum(Var a) {
    Tape& t = a.tape();
    double s = 0.0;
    for (const double v : a.value().data()) {
        s += v;
    }
    if (!needs(a)) {
        return t.record(Tensor::scalar(s), nullptr, "sum");
    }
    const std::size_t ia = a.id();
    return t.record(
        Tensor::scalar(s),
        [ia](Tape& tp, const Tensor&, std::span<const double> g) {
            auto ga = tp.grad(ia);
            for (double& v : ga) {
                v += g[0];
            }
        },
        "sum");
}

Var mean(Var a) {
    const auto n = static_cast<double>(a.value().size());
    return scale(sum(a), 1.0 / n);
}

double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) {
        return -std::numeric_limits<double>::infinity();
    }
    const double m = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (const double x : xs) {
        s += std::exp(x - m);
    }
    return m + std::log(s);
}

std::vector<double> softmax(std::span<const double> xs) {
    std::vector<double> out(xs.size());
    if (xs.empty()) {
        return out;
    }
    const double m = *std::max_element(xs.begin(), xs.end());
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = std::exp(xs[i] - m);
        s += out[i];
    }
    for (double& v : out) {
        v /= s;
    }
    return out;
}

Var softmax_row(Var x) {
    Tape& t = x.tape();
    require_rank1("softmax_row", x);
    if (x.value().size() == 0) {
        throw ContractError("softmax_row: empty input");
    }
    Tensor y = Tensor::vector(softmax(x.value().data()));
    if (!needs(x)) {
        return t.record(std::move(y), nullptr, "softmax_row");
    }
    const std::size_t ix = x.id();
    return t.record(
        std::move(y),
        [ix](Tape& tp, const Tensor& out, std::span<const double> g) {
            double dotp = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                dotp += out[i] * g[i];
            }
            auto gx = tp.grad(ix);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += out[i] * (g[i] - dotp);
            }
        },
        "softmax_row");
}

Var causal_softmax(Var scores) {
    Tape& t = scores.tape();
    const Tensor& s = scores.value();
    if (s.rank() != 2 || s.rows() != s.cols()) {
        throw DimensionError("causal_softmax: expected a square matrix, got " + shape_to_string(s.shape()));
    }
    const std::size_t n = s.rows();
    Tensor y(s.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const auto row_in = s.row(r).subspan(0, r + 1);
        const auto p = softmax(row_in);
        std::copy(p.begin(), p.end(), y.row(r).begin());
    }
    if (!needs(scores)) {
        return t.record(std::move(y), nullptr, "causal_softmax");
    }
    const std::size_t is = scores.id();
    return t.record(
        std::move(y),
        [is, n](Tape& tp, const Tensor& out, std::span<const double> g) {
            auto gs = tp.grad(is);
            for (std::size_t r = 0; r < n; ++r) {
                double dotp = 0.0;
                for (std::size_t c = 0; c <= r; ++c) {
                    dotp += out[r * n + c] * g[r * n + c];
                }
                for (std::size_t c = 0; c <= r; ++c) {
                    gs[r * n + c] += out[r * n + c] * (g[r * n + c] - dotp);
                }
            }
        },
        "causal_softmax");
}

Var embedding_lookup(Var table, std::span<const ItemId> ids, std::optional<std::size_t> frozen_row) {
    Tape& t = table.tape();
    const Tensor& tv = table.value();
    if (tv.rank() != 2) {
        throw DimensionError("embedding_lookup: table must be a matrix, got " + shape_to_string(tv.shape()));
    }
    const std::size_t rows = tv.rows();
    const std::size_t d = tv.cols();
    Tensor out(Shape{ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= rows) {
            throw IndexError("embedding_lookup: id " + std::to_string(ids[i]) + " out of range [0, " +
                             std::to_string(rows - 1) + "]");
        }
        const auto src = tv.row(ids[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    if (!needs(table)) {
        return t.record(std::move(out), nullptr, "embedding_lookup");
    }
    const std::size_t it = table.id();
    std::vector<ItemId> saved(ids.begin(), ids.end());
    return t.record(
        std::move(out),
        [it, d, frozen_row, saved = std::move(saved)](Tape& tp, const Tensor&, std::span<const double> g) {
            auto gt = tp.grad(it);
            for (std::size_t i = 0; i < saved.size(); ++i) {
                if (frozen_row && saved[i] == *frozen_row) {
                    continue;
                }
                for (std::size_t j = 0; j < d; ++j) {
                    gt[saved[i] * d + j] += g[i * d + j];
                }
            }
        },
        "embedding_lookup");
}

Var row(Var x, std::size_t r) {
    Tape& t = x.tape();
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || r >= xv.rows()) {
        throw IndexError("row: index " + std::to_string(r) + " invalid for shape " + shape_to_string(xv.shape()));
    }
    const auto src = xv.row(r);
    Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
    if (!needs(x)) {
        return t.record(std::move(out), nullptr, "row");
    }
    const std::size_t ix = x.id();
    const std::size_t c = xv.cols();
    return t.record(
        std::move(out),
        [ix, r, c](Tape& tp, const Tensor&, std::span<const double> g) {
            auto gx = tp.grad(ix);
            for (std::size_t j = 0; j < c; ++j) {
                gx[r * c + j] += g[j];
            }
        },
        "row");
}

Var dot(Var a, Var b) {
    Tape& t = common_tape(a, b);
    require_same_shape("dot", a, b);
    const auto ad = a.value().data();
    const auto bd = b.value().data();
    double s = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) {
        s += ad[i] * bd[i];
    }
    const bool need_a = needs(a);
    const bool need_b = needs(b);
    if (!need_a && !need_b) {
        return t.record(Tensor::scalar(s), nullptr, "dot");
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(
        Tensor::scalar(s),
        [ia, ib, need_a, need_b](Tape& tp, const Tensor&, std::span<const double> g) {
            const auto av = tp.value(ia).data();
            const auto bv = tp.value(ib).data();
            if (need_a) {
                auto ga = tp.grad(ia);
                for (std::size_t i = 0; i < av.size(); ++i) {
                    ga[i] += g[0] * bv[i];
                }
            }
            if (need_b) {
                auto gb = tp.grad(ib);
                for (std::size_t i = 0; i < av.size(); ++i) {
                    gb[i] += g[0] * av[i];
                }
            }
        },
        "dot");
}

Var cosine_similarity(Var a, Var b) {
    Tape& t = common_tape(a, b);
    require_same_shape("cosine_similarity", a, b);
    if (a.value().size() == 0) {
        throw ContractError("cosine_similarity: empty vectors");
    }
    const auto ad = a.value().data();
    const auto bd = b.value().data();
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) {
        ab += ad[i] * bd[i];
        aa += ad[i] * ad[i];
        bb += bd[i] * bd[i];
    }
    const double na = std::sqrt(aa);
    const double nb = std::sqrt(bb);
    const double denom = na * nb + kCosineEps;
    const double sim = ab / denom;
    const bool need_a = needs(a);
    const bool need_b = needs(b);
    if (!need_a && !need_b) {
        return t.record(Tensor::scalar(sim), nullptr, "cosine_similarity");
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return t.record(
        Tensor::scalar(sim),
        [ia, ib, need_a, need_b, ab, na, nb, denom](Tape& tp, const Tensor&, std::span<const double> g) {
            const auto av = tp.value(ia).data();
            const auto bv = tp.value(ib).data();
            // d/da [ab / (na nb + eps)] = b/D - ab nb a / (na D^2)
            const double inv_d = 1.0 / denom;
            const double coef = ab * inv_d * inv_d;
            if (need_a) {
                auto ga = tp.grad(ia);
                const double ka = na > 0.0 ? coef * nb / na : 0.0;
                for (std::size_t i = 0; i < av.size(); ++i) {
                    ga[i] += g[0] * (bv[i] * inv_d - ka * av[i]);
                }
            }
            if (need_b) {
                auto gb = tp.grad(ib);
                const double kb = nb > 0.0 ? coef * na / nb : 0.0;
                for (std::size_t i = 0; i < bv.size(); ++i) {
                    gb[i] += g[0] * (av[i] * inv_d - kb * bv[i]);
                }
            }
        },
        "cosine_similarity");
}

Var cross_entropy_logits(Var logits, std::size_t target) {
    require_rank1("cross_entropy_logits", logits);
    const std::size_t targets[] = {target};
    const Tensor& lv = logits.value();
    if (target >= lv.size()) {
        throw IndexError("cross_entropy_logits: target " + std::to_string(target) + " out of range [0, " +
                         std::to_string(lv.size()) + ")");
    }
    return cross_entropy_rows(logits, targets);
}

Var cross_entropy_rows(Var logits, std::span<const std::size_t> targets) {
    Tape& t = logits.tape();
    const Tensor& lv = logits.value();
    const std::size_t rows = lv.rows();
    const std::size_t m = lv.cols();
    if (lv.rank() > 2 || targets.size() != rows || m == 0) {
        throw DimensionError("cross_entropy_rows: " + std::to_string(targets.size()) + " targets for logits " +
                             shape_to_string(lv.shape()));
    }
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (targets[r] >= m) {
            throw IndexError("cross_entropy: target " + std::to_string(targets[r]) + " out of range [0, " +
                             std::to_string(m) + ")");
        }
        const auto x = lv.row(r);
        total += log_sum_exp(x) - x[targets[r]];
    }
    const double loss = total / static_cast<double>(rows);
    if (!needs(logits)) {
        return t.record(Tensor::scalar(loss), nullptr, "cross_entropy");
    }
    const std::size_t il = logits.id();
    std::vector<std::size_t> saved(targets.begin(), targets.end());
    return t.record(
        Tensor::scalar(loss),
        [il, m, saved = std::move(saved)](Tape& tp, const Tensor&, std::span<const double> g) {
            const Tensor& lv = tp.value(il);
            auto gl = tp.grad(il);
            const double w = g[0] / static_cast<double>(saved.size());
            for (std::size_t r = 0; r < saved.size(); ++r) {
                const auto p = softmax(lv.row(r));
                for (std::size_t i = 0; i < m; ++i) {
                    gl[r * m + i] += w * (p[i] - (i == saved[r] ? 1.0 : 0.0));
                }
            }
        },
        "cross_entropy");
}

Var score_rows(Var h, Var table, std::size_t count) {
    Tape& t = common_tape(h, table);
    const Tensor& hv = h.value();
    const Tensor& tv = table.value();
    if (tv.rank() != 2 || hv.rank() < 1 || hv.rank() > 2 || hv.cols() != tv.cols() || count > tv.rows()) {
        throw DimensionError("score_rows: h " + shape_to_string(hv.shape()) + " against table " +
                             shape_to_string(tv.shape()) + " with " + std::to_string(count) + " rows");
    }
    const bool vec = hv.rank() == 1;
    const std::size_t n = hv.rows();
    const std::size_t d = hv.cols();
    Tensor out(vec ? Shape{count} : Shape{n, count});
    for (std::size_t r = 0; r < n; ++r) {
        const auto hr = hv.row(r);
        for (std::size_t i = 0; i < count; ++i) {
            const auto e = tv.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                s += hr[j] * e[j];
            }
            out[r * count + i] = s;
        }
    }
    const bool need_h = needs(h);
    const bool need_t = needs(table);
    if (!need_h && !need_t) {
        return t.record(std::move(out), nullptr, "score_rows");
    }
    const std::size_t ih = h.id();
    const std::size_t it = table.id();
    return t.record(
        std::move(out),
        [ih, it, need_h, need_t, n, d, count](Tape& tp, const Tensor&, std::span<const double> g) {
            const auto hd = tp.value(ih).data();
            const auto td = tp.value(it).data();
            if (need_h) {
                auto gh = tp.grad(ih);
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t i = 0; i < count; ++i) {
                        const double gi = g[r * count + i];
                        for (std::size_t j = 0; j < d; ++j) {
                            gh[r * d + j] += gi * td[i * d + j];
                        }
                    }
                }
            }
            if (need_t) {
                auto gt = tp.grad(it);
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t i = 0; i < count; ++i) {
                        const double gi = g[r * count + i];
                        for (std::size_t j = 0; j < d; ++j) {
                            gt[i * d + j] += gi * hd[r * d + j];
                        }
                    }
                }
            }
        },
        "score_rows");
}

Var detach(Var a) { return a.tape().record(a.value(), nullptr, "detach"); }

Var contrastive_nll(std::span<const Var> positives, std::span<const Var> negatives, double tau) {
    if (!(tau > 0.0)) {
        throw ConfigError("contrastive temperature must be > 0, got " + std::to_string(tau));
    }
    if (positives.empty()) {
        throw ContractError("contrastive_nll: at least one positive pair is required");
    }
    Tape& t = positives.front().tape();
    std::vector<std::size_t> ids;
    std::vector<double> logits;
    for (const Var v : positives) {
        if (&v.tape() != &t || v.value().size() != 1) {
            throw ContractError("contrastive_nll: similarities must be scalars on one tape");
        }
        ids.push_back(v.id());
        logits.push_back(v.value().item() / tau);
    }
    const std::size_t n_pos = ids.size();
    for (const Var v : negatives) {
        if (&v.tape() != &t || v.value().size() != 1) {
            throw ContractError("contrastive_nll: similarities must be scalars on one tape");
        }
        ids.push_back(v.id());
        logits.push_back(v.value().item() / tau);
    }
    const std::span<const double> all(logits);
    const double loss = negatives.empty() ? 0.0 : log_sum_exp(all) - log_sum_exp(all.first(n_pos));
    bool any = false;
    for (const auto id : ids) {
        any = any || t.requires_grad(id);
    }
    if (!any || negatives.empty()) {
        return t.record(Tensor::scalar(loss), nullptr, "contrastive_nll");
    }
    return t.record(
        Tensor::scalar(loss),
        [ids = std::move(ids), logits = std::move(logits), n_pos, tau](Tape& tp, const Tensor&,
                                                                        std::span<const double> g) {
            // dL/da_i = softmax_all(a)_i - [i positive] softmax_pos(a)_i
            const auto p_all = softmax(logits);
            const auto p_pos = softmax(std::span<const double>(logits).first(n_pos));
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (!tp.requires_grad(ids[i])) {
                    continue;
                }
                const double da = p_all[i] - (i < n_pos ? p_pos[i] : 0.0);
                tp.grad(ids[i])[0] += g[0] * da / tau;
            }
        },
        "contrastive_nll");
}

} // namespace fsl::numerics
