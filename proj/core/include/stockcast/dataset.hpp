#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stockcast {

/// Dense row-major matrix of named feature channels. All cells finite,
/// column names unique.
class FeatureMatrix {
public:
    FeatureMatrix(std::vector<std::string> names, std::size_t rows,
                  std::vector<double> row_major);

    static FeatureMatrix from_columns(std::vector<std::string> names,
                                      const std::vector<std::vector<double>>& columns);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols(), cols()};
    }
    const std::vector<double>& data() const { return data_; }

    /// Errors: MissingColumn.
    std::size_t col_index(const std::string& name) const;
    std::vector<double> column(std::size_t c) const;

private:
    std::vector<std::string> names_;
    std::size_t rows_;
    std::vector<double> data_;
};

/// Sliding-window supervised dataset: window t covers source rows
/// [t - lookback, t) and its target is the target-column value at row t,
/// the step immediately after the window.
struct WindowedDataset {
    std::size_t lookback = 0;
    std::size_t feature_count = 0;
    std::vector<std::vector<double>> inputs;  // each lookback*feature_count, row-major
    std::vector<double> targets;
    std::vector<std::size_t> target_rows;  // source row index of each target

    std::size_t size() const { return inputs.size(); }

    /// Samples [first, first+count) as a new dataset.
    WindowedDataset subset(std::size_t first, std::size_t count) const;
};

/// Builds all N - lookback windows from a feature matrix and an aligned
/// target column. Errors: SeriesTooShort if rows <= lookback,
/// LengthMismatch if the target column length differs from the row count.
WindowedDataset make_windows(const FeatureMatrix& features,
                             std::span<const double> target_column,
                             std::size_t lookback);

}  // namespace stockcast
