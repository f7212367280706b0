#include "pagc/feature_table.hpp"

#include "pagc/csv.hpp"
#include "pagc/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pagc {

void FeatureTable::validate() const {
    std::set<std::string> seen(feature_names.begin(), feature_names.end());
    if (seen.size() != feature_names.size())
        throw InputError("feature table: duplicate feature names");
    if (subject_ids.size() != values.size() || labels.size() != values.size())
        throw InputError("feature table: row bookkeeping mismatch");
    for (std::size_t r = 0; r < values.size(); ++r) {
        if (values[r].size() != feature_names.size())
            throw InputError("feature table: row width mismatch at row " + std::to_string(r));
        if (labels[r] != 0 && labels[r] != 1)
            throw InputError("feature table: label must be 0 or 1");
        for (double v : values[r])
            if (!std::isfinite(v))
                throw InputError("feature table: non-finite value at row " + std::to_string(r));
    }
}

std::vector<double> FeatureTable::column(std::size_t feature) const {
    std::vector<double> col(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) col[r] = values[r][feature];
    return col;
}

FeatureTable FeatureTable::select_columns(const std::vector<std::size_t>& indices) const {
    FeatureTable out;
    out.subject_ids = subject_ids;
    out.labels = labels;
    out.feature_names.reserve(indices.size());
    for (std::size_t i : indices) out.feature_names.push_back(feature_names[i]);
    out.values.resize(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) {
        out.values[r].reserve(indices.size());
        for (std::size_t i : indices) out.values[r].push_back(values[r][i]);
    }
    return out;
}

FeatureTable FeatureTable::select_columns_by_name(const std::vector<std::string>& names) const {
    std::vector<std::size_t> indices;
    indices.reserve(names.size());
    for (const auto& name : names) {
        const int idx = find_feature(name);
        if (idx < 0) throw InputError("feature not in table: '" + name + "'");
        indices.push_back(static_cast<std::size_t>(idx));
    }
    return select_columns(indices);
}

FeatureTable FeatureTable::select_rows(const std::vector<std::size_t>& indices) const {
    FeatureTable out;
    out.feature_names = feature_names;
    for (std::size_t i : indices) {
        out.subject_ids.push_back(subject_ids[i]);
        out.labels.push_back(labels[i]);
        out.values.push_back(values[i]);
    }
    return out;
}

int FeatureTable::find_feature(const std::string& name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    return it == feature_names.end() ? -1 : static_cast<int>(it - feature_names.begin());
}

void write_feature_table_csv(const FeatureTable& table, const std::string& path) {
    table.validate();
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"subject_id", "label"};
    header.insert(header.end(), table.feature_names.begin(), table.feature_names.end());
    rows.push_back(std::move(header));

    std::vector<std::size_t> order(table.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return table.subject_ids[a] < table.subject_ids[b];
    });

    for (std::size_t i : order) {
        std::vector<std::string> row{table.subject_ids[i], csv::format_int(table.labels[i])};
        for (double v : table.values[i]) row.push_back(csv::format_double(v));
        rows.push_back(std::move(row));
    }
    csv::write_file(path, rows);
}

FeatureTable read_feature_table_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "subject_id" || rows[0][1] != "label")
        throw InputError("bad feature table header: " + path);
    FeatureTable table;
    table.feature_names.assign(rows[0].begin() + 2, rows[0].end());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size())
            throw InputError("feature table row width mismatch in " + path);
        table.subject_ids.push_back(rows[r][0]);
        table.labels.push_back(static_cast<int>(csv::parse_int(rows[r][1])));
        std::vector<double> vals;
        vals.reserve(rows[r].size() - 2);
        for (std::size_t c = 2; c < rows[r].size(); ++c) vals.push_back(csv::parse_double(rows[r][c]));
        table.values.push_back(std::move(vals));
    }
    table.validate();
    return table;
}

} // namespace pagc
