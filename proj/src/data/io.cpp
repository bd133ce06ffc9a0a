#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"
#include "fsl/data/data.hpp"

namespace fsl::data {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
    throw DataError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

std::int64_t parse_ts(std::string_view text, std::string_view source, std::size_t line) {
    std::int64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        fail(source, line, "unparsable ts '" + std::string(text) + "'");
    }
    return v;
}

std::string id_field(const json& obj, const char* key, std::string_view source, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        fail(source, line, std::string("missing field '") + key + "'");
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<std::int64_t>());
    }
    fail(source, line, std::string("field '") + key + "' must be a string");
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

// One RFC-4180 record; quoted fields may span lines. Returns false at EOF.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line,
                     std::string_view source) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    bool was_quoted = false;
    char c = 0;
    const std::size_t start_line = line + 1;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') {
                    ++line;
                }
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty() && !was_quoted) {
            in_quotes = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else if (c == '\n') {
            ++line;
            fields.push_back(std::move(field));
            return true;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (in_quotes) {
        fail(source, start_line, "unterminated quoted field");
    }
    if (!any) {
        return false;
    }
    ++line;
    fields.push_back(std::move(field));
    return true;
}

} // namespace

InteractionFormat format_for(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".csv" ? InteractionFormat::csv : InteractionFormat::jsonl;
}

std::vector<RawInteraction> parse_interactions_jsonl(std::istream& in, std::string_view source) {
    std::vector<RawInteraction> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            fail(source, lineno, "not a JSON object");
        }
        RawInteraction r;
        r.user = id_field(obj, "user", source, lineno);
        r.item = id_field(obj, "item", source, lineno);
        const auto ts = obj.find("ts");
        if (ts == obj.end()) {
            fail(source, lineno, "missing field 'ts'");
        }
        if (ts->is_number_integer()) {
            r.ts = ts->get<std::int64_t>();
        } else if (ts->is_string()) {
            r.ts = parse_ts(ts->get<std::string>(), source, lineno);
        } else {
            fail(source, lineno, "unparsable ts");
        }
        out.push_back(std::move(r));
    }
    if (out.empty()) {
        throw DataError(std::string(source) + ": no interactions");
    }
    return out;
}

std::vector<RawInteraction> parse_interactions_csv(std::istream& in, std::string_view source) {
    std::vector<std::string> fields;
    std::size_t line = 0;
    if (!read_csv_record(in, fields, line, source)) {
        throw DataError(std::string(source) + ": no interactions");
    }
    int col_user = -1;
    int col_item = -1;
    int col_ts = -1;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string& h = fields[i];
        if (h == "user") {
            col_user = static_cast<int>(i);
        } else if (h == "item") {
            col_item = static_cast<int>(i);
        } else if (h == "ts") {
            col_ts = static_cast<int>(i);
        }
    }
    if (col_user < 0 || col_item < 0 || col_ts < 0) {
        fail(source, 1, "header must name user, item and ts");
    }
    const auto width = static_cast<std::size_t>(std::max({col_user, col_item, col_ts}));
    std::vector<RawInteraction> out;
    while (read_csv_record(in, fields, line, source)) {
        if (fields.size() == 1 && fields[0].empty()) {
            continue;
        }
        if (fields.size() <= width) {
            fail(source, line, "expected " + std::to_string(width + 1) + " fields, got " + std::to_string(fields.size()));
        }
        RawInteraction r;
        r.user = fields[static_cast<std::size_t>(col_user)];
        r.item = fields[static_cast<std::size_t>(col_item)];
        if (r.user.empty() || r.item.empty()) {
            fail(source, line, "empty user or item");
        }
        r.ts = parse_ts(fields[static_cast<std::size_t>(col_ts)], source, line);
        out.push_back(std::move(r));
    }
    if (out.empty()) {
        throw DataError(std::string(source) + ": no interactions");
    }
    return out;
}

std::vector<RawInteraction> load_interactions(const std::filesystem::path& path, InteractionFormat format) {
    auto in = open_in(path);
    const std::string source = path.string();
    return format == InteractionFormat::csv ? parse_interactions_csv(in, source) : parse_interactions_jsonl(in, source);
}

void write_interactions_jsonl(std::ostream& out, const std::vector<RawInteraction>& records) {
    for (const auto& r : records) {
        out << json{{"user", r.user}, {"item", r.item}, {"ts", r.ts}}.dump() << '\n';
    }
}

std::vector<ItemMetaRecord> load_item_meta_records(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string source = path.string();
    std::vector<ItemMetaRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            fail(source, lineno, "not a JSON object");
        }
        ItemMetaRecord r;
        r.item = id_field(obj, "item", source, lineno);
        r.title = id_field(obj, "title", source, lineno);
        r.category = id_field(obj, "category", source, lineno);
        if (const auto it = obj.find("latent"); it != obj.end() && !it->is_null()) {
            if (!it->is_array()) {
                fail(source, lineno, "latent must be an array of numbers");
            }
            std::vector<double> v;
            for (const auto& x : *it) {
                if (!x.is_number()) {
                    fail(source, lineno, "latent must be an array of numbers");
                }
                v.push_back(x.get<double>());
            }
            r.latent = std::move(v);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<views::ItemMeta> align_item_meta(const std::vector<ItemMetaRecord>& records, const ItemVocab& vocab) {
    std::vector<views::ItemMeta> out(vocab.size());
    std::vector<bool> filled(vocab.size(), false);
    for (const auto& r : records) {
        if (!vocab.contains(r.item)) {
            continue;
        }
        const ItemId id = vocab.id(r.item);
        out[id] = views::ItemMeta{id, r.title, r.category, r.latent};
        filled[id] = true;
    }
    std::size_t missing = 0;
    for (ItemId id = 0; id < vocab.size(); ++id) {
        if (!filled[id]) {
            out[id] = views::ItemMeta{id, vocab.names[id], "unknown", std::nullopt};
            ++missing;
        }
    }
    if (missing > 0) {
        log::warn(std::to_string(missing) + " items have no metadata; using their ids as titles");
    }
    return out;
}

void write_item_meta(std::ostream& out, const std::vector<views::ItemMeta>& items, const ItemVocab& vocab) {
    for (const auto& m : items) {
        json obj = {{"item", vocab.names.at(m.item_id)}, {"title", m.title}, {"category", m.category}};
        if (m.latent) {
            obj["latent"] = *m.latent;
        }
        out << obj.dump() << '\n';
    }
}

Catalog load_catalog(const std::filesystem::path& path) {
    Catalog cat;
    for (auto& r : load_item_meta_records(path)) {
        if (cat.vocab.contains(r.item)) {
            throw DataError(path.string() + ": duplicate item '" + r.item + "'");
        }
        const ItemId id = cat.vocab.add(r.item);
        cat.items.push_back(views::ItemMeta{id, std::move(r.title), std::move(r.category), std::move(r.latent)});
    }
    if (cat.items.empty()) {
        throw DataError(path.string() + ": no items");
    }
    return cat;
}

void write_clients(std::ostream& out, const std::vector<ClientDataset>& clients, const ItemVocab& vocab) {
    auto names = [&](const ItemList& ids) {
        json arr = json::array();
        for (const ItemId id : ids) {
            arr.push_back(vocab.names.at(id));
        }
        return arr;
    };
    for (const auto& c : clients) {
        json obj = {{"user", c.user_id},
                    {"train", names(c.train.items)},
                    {"valid", vocab.names.at(c.valid_target)},
                    {"test", vocab.names.at(c.test_target)},
                    {"seen", names(c.seen)}};
        if (c.train.timestamps) {
            obj["ts"] = *c.train.timestamps;
        }
        out << obj.dump() << '\n';
    }
}

std::vector<ClientDataset> load_clients(const std::filesystem::path& path, const ItemVocab& vocab) {
    auto in = open_in(path);
    const std::string source = path.string();
    std::vector<ClientDataset> out;
    std::string line;
    std::size_t lineno = 0;
    auto lookup = [&](const json& v) {
        if (!v.is_string() || !vocab.contains(v.get<std::string>())) {
            fail(source, lineno, "unknown item " + v.dump());
        }
        return vocab.id(v.get<std::string>());
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            fail(source, lineno, "not a JSON object");
        }
        try {
            ClientDataset c;
            c.user_id = obj.at("user").get<std::string>();
            c.train.user_id = c.user_id;
            for (const auto& v : obj.at("train")) {
                c.train.items.push_back(lookup(v));
            }
            if (obj.contains("ts")) {
                c.train.timestamps = obj.at("ts").get<std::vector<std::int64_t>>();
            }
            c.valid_target = lookup(obj.at("valid"));
            c.test_target = lookup(obj.at("test"));
            for (const auto& v : obj.at("seen")) {
                c.seen.push_back(lookup(v));
            }
            std::sort(c.seen.begin(), c.seen.end());
            c.seen.erase(std::unique(c.seen.begin(), c.seen.end()), c.seen.end());
            check_client(c, vocab.size());
            out.push_back(std::move(c));
        } catch (const json::exception& e) {
            fail(source, lineno, e.what());
        } catch (const DataError& e) {
            fail(source, lineno, e.what());
        }
    }
    if (out.empty()) {
        throw DataError(source + ": no clients");
    }
    return out;
}

} // namespace fsl::data
