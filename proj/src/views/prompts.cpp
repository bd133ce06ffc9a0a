#include <cctype>
#include <sstream>

#include "fsl/common/errors.hpp"
#include "fsl/views/views.hpp"

namespace fsl::views {

namespace {

constexpr std::string_view kHeader = "A user interacted with these items in order:\n";

constexpr std::string_view kFutureBody =
    "List {n} items this user would likely interact with next. One item title per line, nothing else.";
constexpr std::string_view kParaphraseBody =
    "Rewrite this history as {n} items expressing the same preferences, substituting close alternatives "
    "where natural. One item title per line, nothing else.";
constexpr std::string_view kCounterfactualBody =
    "List {n} items this user would NOT choose. One item title per line, nothing else.";

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_quote(char c) { return c == '"' || c == '\'' || c == '`'; }

// Drops leading list markers: "-", "*", "+", UTF-8 bullet, "12.", "3)", "(4)".
std::string_view strip_marker(std::string_view s) {
    s = trim(s);
    if (s.starts_with("\xe2\x80\xa2")) {
        return trim(s.substr(3));
    }
    if (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '+')) {
        return trim(s.substr(1));
    }
    std::size_t i = 0;
    const bool paren = !s.empty() && s.front() == '(';
    if (paren) {
        ++i;
    }
    const std::size_t digits_from = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        ++i;
    }
    if (i > digits_from && i < s.size() && (s[i] == '.' || s[i] == ')')) {
        return trim(s.substr(i + 1));
    }
    return s;
}

std::string_view strip_quotes(std::string_view s) {
    while (s.size() >= 2 && is_quote(s.front()) && s.back() == s.front()) {
        s = trim(s.substr(1, s.size() - 2));
    }
    return s;
}

} // namespace

std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::rule:
        return "rule";
    case Provenance::llm:
        return "llm";
    case Provenance::cache:
        return "cache";
    }
    return "rule";
}

Provenance parse_provenance(std::string_view text) {
    if (text == "rule") {
        return Provenance::rule;
    }
    if (text == "llm") {
        return Provenance::llm;
    }
    if (text == "cache") {
        return Provenance::cache;
    }
    throw DataError("unknown provenance '" + std::string(text) + "'");
}

std::string_view to_string(ViewKind kind) {
    switch (kind) {
    case ViewKind::future:
        return "future";
    case ViewKind::paraphrase:
        return "paraphrase";
    case ViewKind::counterfactual:
        return "counterfactual";
    }
    return "future";
}

const ItemList& ViewTriple::view(ViewKind kind) const {
    switch (kind) {
    case ViewKind::future:
        return future;
    case ViewKind::paraphrase:
        return paraphrase;
    case ViewKind::counterfactual:
        break;
    }
    return counterfactual;
}

ItemList& ViewTriple::view(ViewKind kind) {
    return const_cast<ItemList&>(static_cast<const ViewTriple&>(*this).view(kind));
}

std::string build_prompt(ViewKind kind, const std::vector<std::string>& titles, std::size_t n_items) {
    if (titles.empty()) {
        throw ContractError("build_prompt needs at least one title");
    }
    std::string body(kind == ViewKind::future       ? kFutureBody
                     : kind == ViewKind::paraphrase ? kParaphraseBody
                                                    : kCounterfactualBody);
    body.replace(body.find("{n}"), 3, std::to_string(n_items));
    std::string out(kHeader);
    for (const std::string& t : titles) {
        out += t;
        out += '\n';
    }
    out += body;
    return out;
}

std::optional<ItemList> parse_generated_items(std::string_view text, const ItemCatalog& catalog) {
    ItemList out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const std::string_view line = strip_quotes(strip_marker(text.substr(pos, end - pos)));
        if (!line.empty()) {
            if (const auto id = catalog.find_title(line)) {
                out.push_back(*id);
            }
        }
        pos = end + 1;
    }
    if (out.empty()) {
        return std::nullopt;
    }
    return out;
}

} // namespace fsl::views
