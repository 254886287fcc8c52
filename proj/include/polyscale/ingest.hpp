#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace polyscale {

/// Which CSV columns play which role. Item columns must hold integer codes;
/// the weight column must hold positive reals. Every other column is kept
/// as text.
struct ColumnSpec {
    std::optional<std::string> id_column;
    std::vector<std::string> item_columns;
    std::optional<std::string> weight_column;
    std::vector<std::string> group_columns;
};

/// A parsed CSV file. Blank cells are absent (std::nullopt).
struct RawTable {
    std::string source;
    std::vector<std::string> header;
    std::size_t n_rows = 0;
    /// 1-based file line of each data row, for error messages.
    std::vector<std::size_t> line_numbers;
    std::map<std::string, std::vector<std::optional<std::string>>> text;
    std::map<std::string, std::vector<std::optional<int>>> codes;

    bool has_column(const std::string& name) const;
    const std::vector<std::optional<std::string>>& column_text(const std::string& name) const;
    const std::vector<std::optional<int>>& column_codes(const std::string& name) const;
};

/// Reads a UTF-8 comma-separated file whose first non-comment row is the
/// header. Lines starting with '#' before the header are skipped.
RawTable load_csv(const std::filesystem::path& path, const ColumnSpec& spec);
RawTable parse_csv(std::istream& in, const ColumnSpec& spec, const std::string& source = "<stream>");

/// Per-item recode map. Missing codes and recode sources are disjoint;
/// targets are nonnegative and unique within the item.
struct ItemCoding {
    std::string item;
    std::map<int, int> recode;
    std::set<int> missing;

    /// Target → source map; throws DataError when the map is not injective.
    ItemCoding inverse() const;
};

struct CodingScheme {
    std::vector<ItemCoding> items;

    const ItemCoding* find(const std::string& item) const;
    void validate() const;

    /// `{"Q40a": {"map": {"1": 1, "2": 4}, "missing": [9]}, ...}`. Item order
    /// follows the file.
    static CodingScheme from_json_text(const std::string& text);
    static CodingScheme load(const std::filesystem::path& path);
    std::string to_json_text() const;

    /// Identity scheme over the codes observed in `raw` for `items`; used
    /// when the input is already recoded.
    static CodingScheme identity_from(const RawTable& raw, const std::vector<std::string>& items);
};

struct ItemInfo {
    std::string id;
    /// Recoded category codes in ascending order.
    std::vector<int> categories;

    std::optional<std::size_t> index_of(int code) const;
};

struct GroupColumn {
    std::string name;
    std::vector<std::optional<std::string>> labels;
};

/// Persons × items matrix of recoded categories. std::nullopt marks MISSING.
struct ResponseMatrix {
    std::vector<std::string> person_ids;
    std::vector<ItemInfo> items;
    std::vector<std::optional<int>> codes;  // row-major, persons × items
    std::vector<double> weights;
    std::vector<GroupColumn> groups;

    std::size_t persons() const { return person_ids.size(); }
    std::size_t item_count() const { return items.size(); }

    std::optional<int> code(std::size_t person, std::size_t item) const {
        return codes[person * items.size() + item];
    }
    /// Position of the person's response within the item's category list.
    std::optional<std::size_t> category_index(std::size_t person, std::size_t item) const;

    std::size_t item_index(const std::string& id) const;
    const GroupColumn& group(const std::string& name) const;

    ResponseMatrix select_persons(const std::vector<std::size_t>& rows) const;
    ResponseMatrix select_items(const std::vector<std::string>& ids) const;

    /// Throws DataError if an invariant does not hold.
    void validate() const;
};

/// Recodes the spec's item columns. Items not named in `spec.item_columns`
/// default to every item in the scheme, in scheme order.
ResponseMatrix apply_coding(const RawTable& raw, const CodingScheme& scheme, const ColumnSpec& spec);

struct ExclusionResult {
    ResponseMatrix kept;
    std::vector<std::size_t> excluded_rows;
};

/// Drops persons who are MISSING on every required item.
ExclusionResult exclude_all_missing(const ResponseMatrix& m, const std::vector<std::string>& required_items);

/// Writes id, items (blank for MISSING), weight and group columns.
void write_response_csv(std::ostream& out, const ResponseMatrix& m, const std::string& id_column = "id",
                        const std::string& weight_column = "weight");

/// Stacks persons of matrices sharing one item layout and group columns.
ResponseMatrix concat_persons(const std::vector<ResponseMatrix>& parts);

}  // namespace polyscale
