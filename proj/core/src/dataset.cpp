#include "stockcast/dataset.hpp"

#include <cmath>
#include <unordered_set>

#include "stockcast/errors.hpp"

namespace stockcast {

FeatureMatrix::FeatureMatrix(std::vector<std::string> names, std::size_t rows,
                             std::vector<double> row_major)
    : names_(std::move(names)), rows_(rows), data_(std::move(row_major)) {
    if (names_.empty()) raise(ErrorKind::EmptyInput, "feature matrix needs columns");
    if (data_.size() != rows_ * names_.size()) {
        raise(ErrorKind::LengthMismatch, "feature data size does not match rows*cols");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (!seen.insert(n).second) {
            raise(ErrorKind::BadParams, "duplicate column name: " + n);
        }
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            raise(ErrorKind::NonFiniteValue,
                  "feature cell " + std::to_string(i) + " is not finite");
        }
    }
}

FeatureMatrix FeatureMatrix::from_columns(std::vector<std::string> names,
                                          const std::vector<std::vector<double>>& columns) {
    if (columns.empty() || names.size() != columns.size()) {
        raise(ErrorKind::LengthMismatch, "column list does not match names");
    }
    const std::size_t rows = columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) raise(ErrorKind::LengthMismatch, "ragged columns");
    }
    std::vector<double> data(rows * columns.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            data[r * columns.size() + c] = columns[c][r];
        }
    }
    return FeatureMatrix(std::move(names), rows, std::move(data));
}

std::size_t FeatureMatrix::col_index(const std::string& name) const {
    for (std::size_t c = 0; c < names_.size(); ++c) {
        if (names_[c] == name) return c;
    }
    raise(ErrorKind::MissingColumn, "no column named " + name);
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
    return out;
}

WindowedDataset WindowedDataset::subset(std::size_t first, std::size_t count) const {
    if (first + count > size()) raise(ErrorKind::SplitOutOfRange, "subset beyond dataset");
    WindowedDataset out;
    out.lookback = lookback;
    out.feature_count = feature_count;
    out.inputs.assign(inputs.begin() + first, inputs.begin() + first + count);
    out.targets.assign(targets.begin() + first, targets.begin() + first + count);
    out.target_rows.assign(target_rows.begin() + first, target_rows.begin() + first + count);
    return out;
}

WindowedDataset make_windows(const FeatureMatrix& features,
                             std::span<const double> target_column,
                             std::size_t lookback) {
    if (lookback == 0) raise(ErrorKind::BadParams, "lookback must be positive");
    if (target_column.size() != features.rows()) {
        raise(ErrorKind::LengthMismatch, "target column length != feature rows");
    }
    if (features.rows() <= lookback) {
        raise(ErrorKind::SeriesTooShort, "need more rows than the lookback window");
    }
    WindowedDataset out;
    out.lookback = lookback;
    out.feature_count = features.cols();
    const std::size_t n = features.rows();
    out.inputs.reserve(n - lookback);
    for (std::size_t t = lookback; t < n; ++t) {
        std::vector<double> window(lookback * features.cols());
        for (std::size_t i = 0; i < lookback; ++i) {
            auto row = features.row(t - lookback + i);
            std::copy(row.begin(), row.end(), window.begin() + i * features.cols());
        }
        out.inputs.push_back(std::move(window));
        out.targets.push_back(target_column[t]);
        out.target_rows.push_back(t);
    }
    return out;
}

}  // namespace stockcast
