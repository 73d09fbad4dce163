#pragma once

#include "mktcube/series.hpp"

#include <string>
#include <vector>

namespace mktcube::data {

constexpr double kSigmaFloor = 1e-8;

struct LabelEntry {
    double raw = 0.0;     // fractional n-day forward return
    double scaled = 0.0;  // raw / trailing-sigma of daily returns
    bool valid = false;
};

/// Volatility-scaled forward returns per (date, stock, horizon).
struct LabelPanel {
    std::vector<std::string> dates;
    std::vector<std::string> stock_ids;
    std::vector<int> horizons;  // default {1, 5, 15, 30}
    // entries[date][stock][horizon_index]
    std::vector<std::vector<std::vector<LabelEntry>>> entries;

    int horizon_index(int horizon) const;
    const LabelEntry& at(int date_idx, int stock_idx, int horizon) const;
};

std::vector<int> default_horizons();

/// Label for one (stock, day, horizon): raw = close(d+h)/close(d) - 1, scaled
/// by the population sigma of the sigma_window daily returns ending at d-1.
/// Missing history/future or sigma below the floor yields an invalid entry.
LabelEntry compute_label(const StockSeries& series, int day_index, int horizon, int sigma_window = 10);

/// Panel over the shared calendar for presorted series.
LabelPanel compute_labels(const std::vector<StockSeries>& sorted_series,
                          const std::vector<int>& horizons = default_horizons(), int sigma_window = 10);

/// CSV schema: date,stock_id,horizon,raw,scaled,valid
void save_labels_csv(const std::string& path, const LabelPanel& panel);
LabelPanel load_labels_csv(const std::string& path);

} // namespace mktcube::data
