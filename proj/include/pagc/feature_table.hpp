#pragma once

#include <string>
#include <vector>

namespace pagc {

/// Named feature columns plus a binary label per row. Row order is the
/// subject order of the cohort; canonical CSV form sorts by subject_id.
struct FeatureTable {
    std::vector<std::string> feature_names;
    std::vector<std::string> subject_ids;
    std::vector<int> labels;                 // 0/1
    std::vector<std::vector<double>> values; // rows x feature count

    std::size_t n_rows() const { return values.size(); }
    std::size_t n_features() const { return feature_names.size(); }

    // Uniform width, unique names, finite values, labels in {0,1}.
    void validate() const;

    // Column vector for one feature.
    std::vector<double> column(std::size_t feature) const;

    FeatureTable select_columns(const std::vector<std::size_t>& indices) const;
    FeatureTable select_columns_by_name(const std::vector<std::string>& names) const;
    FeatureTable select_rows(const std::vector<std::size_t>& indices) const;

    int find_feature(const std::string& name) const; // -1 when absent
};

void write_feature_table_csv(const FeatureTable& table, const std::string& path);
FeatureTable read_feature_table_csv(const std::string& path);

} // namespace pagc
