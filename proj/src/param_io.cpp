#include "polyscale/param_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "polyscale/error.hpp"
#include "polyscale/provenance.hpp"

namespace polyscale {

using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "polyscale-params";
constexpr int kVersion = 1;
constexpr const char* kScaleNote =
    "theta in logits; population N(0,1) fixed during calibration; persons scored by MAP";

std::vector<double> doubles(const ordered_json& j, const std::string& what) {
    if (!j.is_array()) throw ParameterError(what + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ParameterError(what + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

double number(const ordered_json& item, const char* key, const std::string& id) {
    if (!item.contains(key) || !item[key].is_number())
        throw ParameterError("item '" + id + "': missing numeric field '" + key + "'");
    return item[key].get<double>();
}

}  // namespace

std::string layout_checksum(const ItemBank& bank) {
    std::string s(to_string(bank.model));
    for (const auto& it : bank.items) {
        s += '|';
        s += it.id;
        for (int c : it.categories) {
            s += ',';
            s += std::to_string(c);
        }
    }
    return hex64(fnv1a64(s));
}

std::string export_params(const ItemBank& bank) {
    bank.validate();
    ordered_json doc;
    doc["format"] = kFormat;
    doc["version"] = kVersion;
    doc["model"] = std::string(to_string(bank.model));
    doc["prior"] = {{"mean", 0.0}, {"sd", 1.0}};
    doc["scale_note"] = kScaleNote;
    doc["layout_checksum"] = layout_checksum(bank);
    ordered_json items = ordered_json::array();
    for (const auto& it : bank.items) {
        ordered_json j;
        j["id"] = it.id;
        j["categories"] = it.categories;
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, GrmItemParams>) {
                    j["a"] = p.a;
                    j["d"] = p.d;
                } else if constexpr (std::is_same_v<T, GgumItemParams>) {
                    j["a"] = p.a;
                    j["d"] = p.d;
                    j["tau"] = p.tau;
                } else {
                    j["a"] = p.a;
                    j["c"] = p.c;
                    ordered_json d = ordered_json::array();
                    for (std::size_t k = 0; k < p.a.size(); ++k) {
                        double loc = p.location(k);
                        if (std::isfinite(loc))
                            d.push_back(loc);
                        else
                            d.push_back(nullptr);
                    }
                    j["d"] = d;
                }
            },
            it.params);
        items.push_back(std::move(j));
    }
    doc["items"] = std::move(items);
    return doc.dump(2) + "\n";
}

std::string export_params(const FitResult& fit) { return export_params(fit.bank); }

ItemBank import_params(const std::string& text, std::optional<ModelKind> expected) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw ParameterError(std::string("parameter file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != kFormat)
        throw ParameterError("not a polyscale parameter file");
    if (doc.value("version", 0) != kVersion) throw ParameterError("unsupported parameter file version");
    if (!doc.contains("model") || !doc["model"].is_string()) throw ParameterError("parameter file lacks a model");

    ItemBank bank;
    try {
        bank.model = parse_model_kind(doc["model"].get<std::string>());
    } catch (const ConfigError& e) {
        throw ParameterError(e.what());
    }
    if (expected && *expected != bank.model) {
        throw ParameterError("parameter file holds a " + std::string(to_string(bank.model)) +
                             " calibration but " + std::string(to_string(*expected)) + " was requested");
    }
    if (doc.contains("prior")) {
        const auto& pr = doc["prior"];
        if (pr.value("mean", 0.0) != 0.0 || pr.value("sd", 1.0) != 1.0)
            throw ParameterError("only a standard normal prior is supported");
    }
    if (!doc.contains("items") || !doc["items"].is_array()) throw ParameterError("parameter file lacks items");

    for (const auto& j : doc["items"]) {
        CalibratedItem it;
        if (!j.contains("id") || !j["id"].is_string()) throw ParameterError("item without an id");
        it.id = j["id"].get<std::string>();
        if (!j.contains("categories") || !j["categories"].is_array())
            throw ParameterError("item '" + it.id + "' lacks categories");
        for (const auto& c : j["categories"]) {
            if (!c.is_number_integer()) throw ParameterError("item '" + it.id + "': categories must be integers");
            it.categories.push_back(c.get<int>());
        }
        switch (bank.model) {
            case ModelKind::grm: {
                GrmItemParams p;
                p.a = number(j, "a", it.id);
                p.d = doubles(j.value("d", ordered_json()), "item '" + it.id + "' d");
                it.params = p;
                break;
            }
            case ModelKind::ggum: {
                GgumItemParams p;
                p.a = number(j, "a", it.id);
                p.d = number(j, "d", it.id);
                p.tau = doubles(j.value("tau", ordered_json()), "item '" + it.id + "' tau");
                it.params = p;
                break;
            }
            case ModelKind::nrm: {
                NrmItemParams p;
                p.a = doubles(j.value("a", ordered_json()), "item '" + it.id + "' a");
                p.c = doubles(j.value("c", ordered_json()), "item '" + it.id + "' c");
                it.params = p;
                break;
            }
        }
        bank.items.push_back(std::move(it));
    }
    bank.validate();
    if (doc.contains("layout_checksum")) {
        if (!doc["layout_checksum"].is_string() || doc["layout_checksum"].get<std::string>() != layout_checksum(bank))
            throw ParameterError("parameter file layout checksum does not match its items");
    }
    return bank;
}

ItemBank load_params(const std::filesystem::path& path, std::optional<ModelKind> expected) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open parameter file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return import_params(ss.str(), expected);
    } catch (const ParameterError& e) {
        throw ParameterError(path.string() + ": " + e.what());
    }
}

void save_params(const std::filesystem::path& path, const ItemBank& bank) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << export_params(bank);
}

}  // namespace polyscale
