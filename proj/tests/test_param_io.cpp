#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "polyscale/error.hpp"
#include "polyscale/param_io.hpp"
#include "polyscale/provenance.hpp"

using namespace polyscale;

namespace {

std::vector<ItemBank> banks() {
    return {
        ItemBank{ModelKind::grm, {{"q1", {1, 2, 3, 4}, GrmItemParams{1.25, {-1.1, 0.1 + 0.2, 1.7}}}}},
        ItemBank{ModelKind::ggum, {{"q1", {0, 1, 2}, GgumItemParams{0.8, -0.4, {-1.3, -0.2}}}}},
        ItemBank{ModelKind::nrm,
                 {{"q1", {1, 2, 3}, NrmItemParams{{-0.7, 0.0, 0.7}, {0.1, 0.3, -0.4}}},
                  {"q2", {2, 4}, NrmItemParams{{-0.5, 0.5}, {0.2, -0.2}}}}},
    };
}

}  // namespace

TEST_CASE("export import export is byte identical") {
    for (const auto& b : banks()) {
        const auto text = export_params(b);
        CHECK(export_params(import_params(text)) == text);
    }
}

TEST_CASE("nrm files carry derived locations") {
    auto doc = nlohmann::json::parse(export_params(banks()[2]));
    const auto& d = doc["items"][0]["d"];
    CHECK(d[0].get<double>() == doctest::Approx(0.1 / 0.7));
    CHECK(d[1].is_null());
    CHECK(doc["prior"]["sd"].get<double>() == 1.0);
}

TEST_CASE("model mismatch and invalid parameters") {
    const auto grm = export_params(banks()[0]);
    CHECK_THROWS_AS(import_params(grm, ModelKind::nrm), ParameterError);
    CHECK_NOTHROW(import_params(grm, ModelKind::grm));

    auto doc = nlohmann::ordered_json::parse(grm);
    doc["items"][0]["a"] = -0.5;
    CHECK_THROWS_AS(import_params(doc.dump()), ParameterError);

    doc = nlohmann::ordered_json::parse(grm);
    doc["items"][0]["categories"] = {1, 2, 3, 5};
    CHECK_THROWS_AS(import_params(doc.dump()), ParameterError);

    doc = nlohmann::ordered_json::parse(grm);
    doc["prior"]["sd"] = 2.0;
    CHECK_THROWS_AS(import_params(doc.dump()), ParameterError);

    doc = nlohmann::ordered_json::parse(grm);
    doc["items"][0]["d"] = {0.5, 0.2, 1.0};
    CHECK_THROWS_AS(import_params(doc.dump()), ParameterError);

    CHECK_THROWS_AS(import_params("{not json"), ParameterError);
    CHECK_THROWS_AS(import_params(R"({"format":"other"})"), ParameterError);
}

TEST_CASE("hand written file without optional fields") {
    const char* text = R"({"format":"polyscale-params","version":1,"model":"grm",
      "items":[{"id":"x","categories":[0,1],"a":1.0,"d":[0.0]}]})";
    auto b = import_params(text);
    CHECK(b.items[0].id == "x");
    CHECK(std::get<GrmItemParams>(b.items[0].params).a == 1.0);
}

TEST_CASE("files on disk") {
    auto path = std::filesystem::temp_directory_path() / "polyscale_params_test.json";
    save_params(path, banks()[1]);
    auto b = load_params(path, ModelKind::ggum);
    CHECK(std::get<GgumItemParams>(b.items[0].params).d == -0.4);
    CHECK(file_checksum(path) == hex64(fnv1a64(export_params(banks()[1]))));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_params(path), ConfigError);
}

TEST_CASE("fnv-1a") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}
