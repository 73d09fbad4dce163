#pragma once

#include "mktcube/labels.hpp"
#include "mktcube/market_image.hpp"
#include "mktcube/splits.hpp"

#include <string>
#include <vector>

namespace mktcube::data {

enum class Part { Train, Validation, Backtest };

/// Fully assembled modeling dataset: normalized images on the eligible
/// calendar, labels, and the chronological split. Normalization statistics
/// are fitted on the training partition only.
struct Dataset {
    std::vector<std::string> dates;  // eligible days (all stocks available)
    std::vector<std::string> stock_order;
    std::vector<int> sector_ids;     // aligned with stock_order
    std::vector<std::string> indicator_names;
    std::vector<RowMat> images_raw;
    std::vector<RowMat> images_norm;
    NormStats stats;
    LabelPanel labels;  // aligned with `dates`
    Split split;
    int lookback = 10;

    int days() const { return static_cast<int>(dates.size()); }
    int stocks() const { return static_cast<int>(stock_order.size()); }
    int indicators() const { return static_cast<int>(indicator_names.size()); }
    const std::vector<int>& part_days(Part p) const;
};

/// One supervised example: the lookback window ending at date_idx, the target
/// stock, and its scaled forward return.
struct Sample {
    int date_idx;
    int stock_idx;
    double label;  // scaled return
    double raw;    // raw fractional return
};

struct DatasetConfig {
    IndicatorConfig indicators;
    SplitSpec split;
    std::vector<int> horizons = default_horizons();
    int sigma_window = 10;
    int lookback = 10;
};

Dataset build_dataset(const std::vector<StockSeries>& series, const DatasetConfig& cfg);

/// Dataset around preloaded artifacts (cube file + label CSV).
Dataset build_dataset(const MarketCube& cube, const LabelPanel& labels, const SplitSpec& split_spec,
                      const std::vector<int>& sector_ids, int lookback);

/// Samples of one partition at one horizon, date-major then stock-major.
/// Invalid labels are skipped and counted; windows shorter than the lookback
/// are skipped.
std::vector<Sample> collect_samples(const Dataset& ds, Part part, int horizon, int* invalid_count = nullptr);

} // namespace mktcube::data
