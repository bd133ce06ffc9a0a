#include "fsl/views/generator.hpp"

#include <algorithm>
#include <cstdio>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"
#include "fsl/common/rng.hpp"

namespace fsl::views {

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
    case GeneratorKind::rule:
        return "rule";
    case GeneratorKind::llm:
        return "llm";
    case GeneratorKind::augment:
        return "augment";
    }
    return "rule";
}

GeneratorKind parse_generator_kind(std::string_view text) {
    if (text == "rule") {
        return GeneratorKind::rule;
    }
    if (text == "llm") {
        return GeneratorKind::llm;
    }
    if (text == "augment") {
        return GeneratorKind::augment;
    }
    throw ConfigError("unknown view generator '" + std::string(text) + "' (expected rule|llm|augment)");
}

void validate(const GeneratorConfig& cfg) {
    if (cfg.future_len == 0) {
        throw ConfigError("views.future_len must be >= 1");
    }
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError(std::string("views.") + name + " must lie in [0, 1]");
        }
    };
    prob(cfg.substitute_prob, "substitute_prob");
    prob(cfg.swap_prob, "swap_prob");
    prob(cfg.mask_prob, "mask_prob");
    if (!(cfg.crop_ratio > 0.0 && cfg.crop_ratio <= 1.0)) {
        throw ConfigError("views.crop_ratio must lie in (0, 1]");
    }
    if (cfg.kind == GeneratorKind::llm) {
        if (cfg.llm.endpoint.empty()) {
            throw ConfigError("views.kind = llm needs llm.endpoint (or FEDSEQ_LLM_ENDPOINT)");
        }
        if (cfg.llm.parallelism < 1 || cfg.llm.parallelism > 1024) {
            throw ConfigError("llm.parallelism must lie in [1, 1024]");
        }
        if (cfg.llm.max_tokens < 1 || cfg.llm.timeout_ms < 1 || cfg.llm.max_retries < 0 || cfg.llm.backoff_ms < 0) {
            throw ConfigError("llm.max_tokens and llm.timeout_ms must be >= 1, retries and backoff >= 0");
        }
    }
}

std::string config_digest(const GeneratorConfig& cfg) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "kind=%s;future_len=%zu;sub=%.17g;swap=%.17g;temp=%.17g;max_tokens=%d",
                  std::string(to_string(cfg.kind)).c_str(), cfg.future_len, cfg.substitute_prob, cfg.swap_prob,
                  cfg.llm.temperature, cfg.llm.max_tokens);
    return buf;
}

ViewTriple generate_rule_views(const GeneratorConfig& cfg, std::span<const ItemId> seq, const ItemCatalog& catalog,
                               std::uint64_t seed) {
    ViewTriple t;
    t.future = rule_future(seq, catalog, cfg.future_len, seed);
    t.paraphrase = rule_paraphrase(seq, catalog, cfg.substitute_prob, cfg.swap_prob, seed);
    t.counterfactual = rule_counterfactual(seq, catalog, seed);
    return t;
}

ViewGenerator::ViewGenerator(GeneratorConfig cfg, const ItemCatalog& catalog, ItemId padding_id,
                             std::shared_ptr<CompletionClient> client)
    : cfg_(std::move(cfg)),
      catalog_(catalog),
      padding_id_(padding_id),
      digest_(config_digest(cfg_)),
      client_(std::move(client)),
      llm_slots_(std::clamp(cfg_.llm.parallelism, 1, 1024)) {
    validate(cfg_);
    if (cfg_.kind == GeneratorKind::llm) {
        if (!client_) {
            client_ = std::make_shared<HttpCompletionClient>(cfg_.llm);
        }
        if (!cfg_.cache_path.empty()) {
            cache_ = std::make_unique<ViewCache>(cfg_.cache_path);
        }
    }
}

GeneratorStats ViewGenerator::stats() const {
    return {triples_.load(), llm_views_.load(), fallback_views_.load(), cache_hits_.load()};
}

ViewTriple ViewGenerator::generate(std::span<const ItemId> seq, std::uint64_t seed) {
    ++triples_;
    switch (cfg_.kind) {
    case GeneratorKind::rule:
        return generate_rule_views(cfg_, seq, catalog_, seed);
    case GeneratorKind::augment: {
        ViewTriple t;
        t.future = augment_crop(seq, cfg_.crop_ratio, seed);
        t.paraphrase = augment_mask(seq, cfg_.mask_prob, padding_id_, seed);
        t.counterfactual = random_negative(seq, catalog_.size(), seed);
        return t;
    }
    case GeneratorKind::llm:
        break;
    }
    if (!cache_) {
        return generate_llm(seq, seed);
    }
    const std::string key = cache_key(kPromptVersion, digest_, seq);
    if (auto hit = cache_->get(key)) {
        ++cache_hits_;
        hit->provenance.fill(Provenance::cache);
        return *hit;
    }
    ViewTriple fresh = generate_llm(seq, seed);
    const bool any_llm = std::any_of(fresh.provenance.begin(), fresh.provenance.end(),
                                     [](Provenance p) { return p == Provenance::llm; });
    if (any_llm) {
        try {
            cache_->put(key, fresh);
        } catch (const Error& e) {
            log::warn(std::string("view cache write failed: ") + e.what());
        }
    }
    return fresh;
}

std::optional<ItemList> ViewGenerator::llm_view(ViewKind kind, std::span<const ItemId> seq, std::uint64_t seed) {
    std::vector<std::string> titles;
    titles.reserve(seq.size());
    for (const ItemId id : seq) {
        titles.push_back(catalog_.at(id).title);
    }
    const std::size_t n = kind == ViewKind::future ? cfg_.future_len : seq.size();
    CompletionRequest req;
    req.prompt = build_prompt(kind, titles, n);
    req.max_tokens = cfg_.llm.max_tokens;
    req.temperature = cfg_.llm.temperature;
    req.seed = rng::derive({seed, static_cast<std::uint64_t>(kind)});

    std::optional<std::string> text;
    llm_slots_.acquire();
    try {
        text = client_->complete(req);
    } catch (const std::exception& e) {
        log::warn(std::string("llm client error: ") + e.what());
    }
    llm_slots_.release();
    if (!text) {
        return std::nullopt;
    }
    auto ids = parse_generated_items(*text, catalog_);
    if (!ids) {
        return std::nullopt;
    }
    if (ids->size() > n) {
        ids->resize(n);
    }
    // A paraphrase must keep the anchor length; a short one is unusable.
    if (kind == ViewKind::paraphrase && ids->size() != n) {
        return std::nullopt;
    }
    return ids;
}

ViewTriple ViewGenerator::generate_llm(std::span<const ItemId> seq, std::uint64_t seed) {
    ViewTriple t = generate_rule_views(cfg_, seq, catalog_, seed);
    for (const ViewKind kind : {ViewKind::future, ViewKind::paraphrase, ViewKind::counterfactual}) {
        if (auto ids = llm_view(kind, seq, seed)) {
            t.view(kind) = std::move(*ids);
            t.provenance[static_cast<std::size_t>(kind)] = Provenance::llm;
            ++llm_views_;
        } else {
            ++fallback_views_;
            log::info(std::string("llm ") + std::string(to_string(kind)) + " view unavailable; using rule view");
        }
    }
    return t;
}

} // namespace fsl::views
