#include "polyscale/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "polyscale/csv.hpp"
#include "polyscale/error.hpp"

namespace polyscale {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> parse_real(std::string_view s) {
    double v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string where(const RawTable& raw, std::size_t row) {
    std::ostringstream os;
    os << raw.source << ":" << (row < raw.line_numbers.size() ? raw.line_numbers[row] : row + 2);
    return os.str();
}

}  // namespace

bool RawTable::has_column(const std::string& name) const { return text.count(name) > 0; }

const std::vector<std::optional<std::string>>& RawTable::column_text(const std::string& name) const {
    auto it = text.find(name);
    if (it == text.end()) throw DataError(source + ": no column '" + name + "'");
    return it->second;
}

const std::vector<std::optional<int>>& RawTable::column_codes(const std::string& name) const {
    auto it = codes.find(name);
    if (it == codes.end()) throw DataError(source + ": column '" + name + "' was not loaded as an item column");
    return it->second;
}

RawTable parse_csv(std::istream& in, const ColumnSpec& spec, const std::string& source) {
    RawTable raw;
    raw.source = source;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (!have_header && std::getline(in, line)) {
        ++line_no;
        if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.empty() || line[0] == '#') continue;
        for (auto& f : csv::split_record(line)) raw.header.emplace_back(trim(f));
        have_header = true;
    }
    if (!have_header) throw DataError(source + ": missing header row");

    std::set<std::string> seen;
    for (const auto& h : raw.header) {
        if (!seen.insert(h).second) throw DataError(source + ": duplicate column name '" + h + "'");
    }
    auto require = [&](const std::string& name) {
        if (!seen.count(name)) throw DataError(source + ": column '" + name + "' not found in header");
    };
    if (spec.id_column) require(*spec.id_column);
    if (spec.weight_column) require(*spec.weight_column);
    for (const auto& c : spec.item_columns) require(c);
    for (const auto& c : spec.group_columns) require(c);

    std::vector<std::vector<std::optional<std::string>>*> cols;
    for (const auto& h : raw.header) cols.push_back(&raw.text[h]);

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = csv::split_record(line);
        if (fields.size() != raw.header.size()) {
            std::ostringstream os;
            os << source << ":" << line_no << ": expected " << raw.header.size() << " fields, found "
               << fields.size();
            throw DataError(os.str());
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            auto v = trim(fields[c]);
            if (v.empty())
                cols[c]->push_back(std::nullopt);
            else
                cols[c]->push_back(std::string(v));
        }
        raw.line_numbers.push_back(line_no);
        ++raw.n_rows;
    }

    for (const auto& item : spec.item_columns) {
        const auto& col = raw.text.at(item);
        auto& out = raw.codes[item];
        out.reserve(col.size());
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (!col[r]) {
                out.push_back(std::nullopt);
                continue;
            }
            auto v = parse_int(*col[r]);
            if (!v) {
                throw DataError(where(raw, r) + ": non-integer code '" + *col[r] + "' in item column '" + item +
                                "'");
            }
            out.push_back(v);
        }
    }
    if (spec.weight_column) {
        const auto& col = raw.text.at(*spec.weight_column);
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (col[r] && !parse_real(*col[r])) {
                throw DataError(where(raw, r) + ": non-numeric weight '" + *col[r] + "'");
            }
        }
    }
    return raw;
}

RawTable load_csv(const std::filesystem::path& path, const ColumnSpec& spec) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_csv(in, spec, path.string());
}

ItemCoding ItemCoding::inverse() const {
    ItemCoding inv;
    inv.item = item;
    for (auto [from, to] : recode) {
        if (!inv.recode.emplace(to, from).second) {
            throw DataError("coding for '" + item + "' is not invertible: target " + std::to_string(to) +
                            " has several sources");
        }
    }
    return inv;
}

const ItemCoding* CodingScheme::find(const std::string& item) const {
    for (const auto& c : items)
        if (c.item == item) return &c;
    return nullptr;
}

void CodingScheme::validate() const {
    std::set<std::string> ids;
    for (const auto& c : items) {
        if (!ids.insert(c.item).second) throw DataError("coding scheme lists item '" + c.item + "' twice");
        if (c.recode.empty()) throw DataError("coding scheme for '" + c.item + "' maps no codes");
        std::set<int> targets;
        for (auto [from, to] : c.recode) {
            if (to < 0) {
                throw DataError("coding scheme for '" + c.item + "': negative target " + std::to_string(to));
            }
            if (!targets.insert(to).second) {
                throw DataError("coding scheme for '" + c.item + "': duplicate recode target " +
                                std::to_string(to));
            }
            if (c.missing.count(from)) {
                throw DataError("coding scheme for '" + c.item + "': code " + std::to_string(from) +
                                " is both recoded and missing");
            }
        }
    }
}

CodingScheme CodingScheme::from_json_text(const std::string& text) {
    using nlohmann::ordered_json;
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw ConfigError(std::string("coding scheme is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("coding scheme must be a JSON object keyed by item");
    CodingScheme scheme;
    for (const auto& [item, body] : doc.items()) {
        ItemCoding c;
        c.item = item;
        if (!body.is_object() || !body.contains("map") || !body["map"].is_object()) {
            throw ConfigError("coding scheme for '" + item + "' needs a \"map\" object");
        }
        for (const auto& [from, to] : body["map"].items()) {
            auto code = parse_int(trim(from));
            if (!code || !to.is_number_integer()) {
                throw ConfigError("coding scheme for '" + item + "': entries must map integer codes to integers");
            }
            c.recode[*code] = to.get<int>();
        }
        if (body.contains("missing")) {
            if (!body["missing"].is_array()) throw ConfigError("\"missing\" for '" + item + "' must be an array");
            for (const auto& m : body["missing"]) {
                if (!m.is_number_integer()) throw ConfigError("missing codes must be integers");
                c.missing.insert(m.get<int>());
            }
        }
        scheme.items.push_back(std::move(c));
    }
    try {
        scheme.validate();
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return scheme;
}

CodingScheme CodingScheme::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open coding scheme " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string CodingScheme::to_json_text() const {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& c : items) {
        nlohmann::ordered_json map = nlohmann::ordered_json::object();
        for (auto [from, to] : c.recode) map[std::to_string(from)] = to;
        doc[c.item]["map"] = map;
        doc[c.item]["missing"] = std::vector<int>(c.missing.begin(), c.missing.end());
    }
    return doc.dump(2) + "\n";
}

CodingScheme CodingScheme::identity_from(const RawTable& raw, const std::vector<std::string>& items) {
    CodingScheme scheme;
    for (const auto& item : items) {
        ItemCoding c;
        c.item = item;
        for (const auto& v : raw.column_codes(item))
            if (v) c.recode[*v] = *v;
        scheme.items.push_back(std::move(c));
    }
    return scheme;
}

std::optional<std::size_t> ItemInfo::index_of(int code) const {
    auto it = std::lower_bound(categories.begin(), categories.end(), code);
    if (it == categories.end() || *it != code) return std::nullopt;
    return static_cast<std::size_t>(it - categories.begin());
}

std::optional<std::size_t> ResponseMatrix::category_index(std::size_t person, std::size_t item) const {
    auto c = code(person, item);
    if (!c) return std::nullopt;
    return items[item].index_of(*c);
}

std::size_t ResponseMatrix::item_index(const std::string& id) const {
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].id == id) return i;
    throw DataError("unknown item '" + id + "'");
}

const GroupColumn& ResponseMatrix::group(const std::string& name) const {
    for (const auto& g : groups)
        if (g.name == name) return g;
    throw DataError("unknown group column '" + name + "'");
}

ResponseMatrix ResponseMatrix::select_persons(const std::vector<std::size_t>& rows) const {
    ResponseMatrix out;
    out.items = items;
    const std::size_t ni = items.size();
    out.person_ids.reserve(rows.size());
    out.codes.reserve(rows.size() * ni);
    out.weights.reserve(rows.size());
    for (auto r : rows) {
        out.person_ids.push_back(person_ids.at(r));
        out.weights.push_back(weights.at(r));
        for (std::size_t i = 0; i < ni; ++i) out.codes.push_back(codes[r * ni + i]);
    }
    for (const auto& g : groups) {
        GroupColumn gc{g.name, {}};
        gc.labels.reserve(rows.size());
        for (auto r : rows) gc.labels.push_back(g.labels.at(r));
        out.groups.push_back(std::move(gc));
    }
    return out;
}

ResponseMatrix ResponseMatrix::select_items(const std::vector<std::string>& ids) const {
    std::vector<std::size_t> idx;
    for (const auto& id : ids) idx.push_back(item_index(id));
    ResponseMatrix out;
    out.person_ids = person_ids;
    out.weights = weights;
    out.groups = groups;
    for (auto i : idx) out.items.push_back(items[i]);
    out.codes.reserve(persons() * idx.size());
    for (std::size_t n = 0; n < persons(); ++n)
        for (auto i : idx) out.codes.push_back(code(n, i));
    return out;
}

void ResponseMatrix::validate() const {
    if (person_ids.empty()) throw DataError("response matrix has no persons");
    if (codes.size() != persons() * items.size()) throw DataError("response matrix shape mismatch");
    if (weights.size() != persons()) throw DataError("weights not aligned with persons");
    for (std::size_t n = 0; n < persons(); ++n) {
        if (!(weights[n] > 0)) throw DataError("person '" + person_ids[n] + "' has non-positive weight");
    }
    for (const auto& g : groups) {
        if (g.labels.size() != persons()) throw DataError("group column '" + g.name + "' not aligned");
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& cats = items[i].categories;
        if (!std::is_sorted(cats.begin(), cats.end()) ||
            std::adjacent_find(cats.begin(), cats.end()) != cats.end()) {
            throw DataError("item '" + items[i].id + "' category list must be strictly ascending");
        }
        for (std::size_t n = 0; n < persons(); ++n) {
            auto c = code(n, i);
            if (c && !items[i].index_of(*c)) {
                throw DataError("person '" + person_ids[n] + "' item '" + items[i].id + "': code " +
                                std::to_string(*c) + " outside the category list");
            }
        }
    }
}

ResponseMatrix apply_coding(const RawTable& raw, const CodingScheme& scheme, const ColumnSpec& spec) {
    scheme.validate();
    std::vector<std::string> item_ids = spec.item_columns;
    if (item_ids.empty())
        for (const auto& c : scheme.items) item_ids.push_back(c.item);
    if (raw.n_rows == 0) throw DataError(raw.source + ": no data rows");

    ResponseMatrix m;
    const std::size_t n = raw.n_rows;
    std::vector<const ItemCoding*> codings;
    for (const auto& id : item_ids) {
        const ItemCoding* c = scheme.find(id);
        if (!c) throw ConfigError("coding scheme has no entry for item '" + id + "'");
        codings.push_back(c);
        ItemInfo info{id, {}};
        for (auto [from, to] : c->recode) info.categories.push_back(to);
        std::sort(info.categories.begin(), info.categories.end());
        m.items.push_back(std::move(info));
    }

    m.codes.resize(n * item_ids.size());
    for (std::size_t i = 0; i < item_ids.size(); ++i) {
        const auto& col = raw.column_codes(item_ids[i]);
        for (std::size_t r = 0; r < n; ++r) {
            if (!col[r]) continue;
            int v = *col[r];
            if (codings[i]->missing.count(v)) continue;
            auto it = codings[i]->recode.find(v);
            if (it == codings[i]->recode.end()) {
                throw DataError(where(raw, r) + ": item '" + item_ids[i] + "' has unmapped code " +
                                std::to_string(v) + " (row " + std::to_string(r + 1) + ")");
            }
            m.codes[r * item_ids.size() + i] = it->second;
        }
    }

    if (spec.id_column) {
        const auto& col = raw.column_text(*spec.id_column);
        for (std::size_t r = 0; r < n; ++r) m.person_ids.push_back(col[r].value_or(std::to_string(r + 1)));
    } else {
        for (std::size_t r = 0; r < n; ++r) m.person_ids.push_back(std::to_string(r + 1));
    }

    m.weights.assign(n, 1.0);
    if (spec.weight_column) {
        const auto& col = raw.column_text(*spec.weight_column);
        for (std::size_t r = 0; r < n; ++r) {
            auto w = col[r] ? parse_real(*col[r]) : std::nullopt;
            if (!w) throw DataError(where(raw, r) + ": missing or non-numeric weight");
            if (!(*w > 0)) throw DataError(where(raw, r) + ": weight must be positive");
            m.weights[r] = *w;
        }
    }

    for (const auto& g : spec.group_columns) m.groups.push_back(GroupColumn{g, raw.column_text(g)});
    m.validate();
    return m;
}

ExclusionResult exclude_all_missing(const ResponseMatrix& m, const std::vector<std::string>& required_items) {
    std::vector<std::size_t> idx;
    for (const auto& id : required_items) idx.push_back(m.item_index(id));
    ExclusionResult res;
    std::vector<std::size_t> keep;
    for (std::size_t n = 0; n < m.persons(); ++n) {
        bool any = idx.empty();
        for (auto i : idx) any = any || m.code(n, i).has_value();
        (any ? keep : res.excluded_rows).push_back(n);
    }
    if (keep.empty()) throw DataError("every person is missing all required items");
    res.kept = m.select_persons(keep);
    return res;
}

void write_response_csv(std::ostream& out, const ResponseMatrix& m, const std::string& id_column,
                        const std::string& weight_column) {
    std::vector<std::string> row{id_column};
    for (const auto& it : m.items) row.push_back(it.id);
    row.push_back(weight_column);
    for (const auto& g : m.groups) row.push_back(g.name);
    csv::write_record(out, row);
    for (std::size_t n = 0; n < m.persons(); ++n) {
        row.assign(1, m.person_ids[n]);
        for (std::size_t i = 0; i < m.item_count(); ++i) {
            auto c = m.code(n, i);
            row.push_back(c ? std::to_string(*c) : "");
        }
        row.push_back(csv::format_double(m.weights[n]));
        for (const auto& g : m.groups) row.push_back(g.labels[n].value_or(""));
        csv::write_record(out, row);
    }
}

ResponseMatrix concat_persons(const std::vector<ResponseMatrix>& parts) {
    if (parts.empty()) throw DataError("nothing to concatenate");
    ResponseMatrix out;
    out.items = parts.front().items;
    for (const auto& g : parts.front().groups) out.groups.push_back(GroupColumn{g.name, {}});
    for (const auto& p : parts) {
        if (p.item_count() != out.item_count() || p.groups.size() != out.groups.size())
            throw DataError("cannot concatenate matrices with different layouts");
        for (std::size_t i = 0; i < out.item_count(); ++i) {
            if (p.items[i].id != out.items[i].id) throw DataError("item order differs between parts");
            for (int c : p.items[i].categories) {
                if (!out.items[i].index_of(c)) {
                    auto& cats = out.items[i].categories;
                    cats.insert(std::lower_bound(cats.begin(), cats.end(), c), c);
                }
            }
        }
        out.person_ids.insert(out.person_ids.end(), p.person_ids.begin(), p.person_ids.end());
        out.codes.insert(out.codes.end(), p.codes.begin(), p.codes.end());
        out.weights.insert(out.weights.end(), p.weights.begin(), p.weights.end());
        for (std::size_t g = 0; g < out.groups.size(); ++g) {
            if (p.groups[g].name != out.groups[g].name) throw DataError("group columns differ between parts");
            out.groups[g].labels.insert(out.groups[g].labels.end(), p.groups[g].labels.begin(),
                                        p.groups[g].labels.end());
        }
    }
    return out;
}

}  // namespace polyscale
