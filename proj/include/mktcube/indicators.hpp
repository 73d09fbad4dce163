#pragma once

#include "mktcube/series.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mktcube::data {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FillMode {
    CarryForward,   // each day takes the most recent prior observation
    PaperBackward,  // each day takes the next available observation
};

FillMode parse_fill_mode(const std::string& s);

/// Window parameters for the technical indicators. The column manifest is
/// versioned through indicator_names(); changing defaults changes the manifest.
struct IndicatorConfig {
    int rsi_period = 14;
    int macd_fast = 12;
    int macd_slow = 26;
    int macd_signal = 9;
    int roc_period = 10;
    int momentum_period = 10;
    int boll_period = 20;
    double boll_k = 2.0;
    int dmi_period = 14;
    FillMode fill = FillMode::CarryForward;

    /// First day index on which every technical column is defined.
    int warmup_days() const;
};

/// The 40-column manifest: 6 price ratios, 11 historical returns, 16 technical
/// components, 7 fundamentals.
std::vector<std::string> indicator_names(const IndicatorConfig& cfg);

/// All indicator values for one stock. Days before the warm-up (or before the
/// first fundamental observation) are flagged unavailable.
struct IndicatorPanel {
    std::vector<std::string> names;
    RowMat values;                 // days x n, unavailable rows left at 0
    std::vector<bool> available;   // per day
};

IndicatorPanel compute_indicators(const StockSeries& series, const IndicatorConfig& cfg);

/// Densified fundamentals on the daily grid.
struct FilledFundamentals {
    RowMat values;                // days x 7
    std::vector<bool> available;  // false outside the fill's reach
};

FilledFundamentals fill_fundamentals(const StockSeries& series, FillMode mode);

} // namespace mktcube::data
