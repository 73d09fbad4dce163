#pragma once

#include <optional>
#include <string>
#include <vector>

namespace mktcube::data {

/// Counts may be given explicitly; otherwise the 3265/754/504 trading-day
/// proportions apply. Date boundaries, when set, win over counts; a boundary
/// day belongs to the later partition.
struct SplitSpec {
    std::optional<int> train_days;
    std::optional<int> val_days;
    std::optional<int> backtest_days;
    std::optional<std::string> train_end;  // first validation date
    std::optional<std::string> val_end;    // first backtest date
};

struct Split {
    std::vector<int> train;
    std::vector<int> validation;
    std::vector<int> backtest;
};

/// Chronological, disjoint partition of [0, n_days) (or of `dates` when date
/// boundaries are used).
Split split_dates(int n_days, const SplitSpec& spec);
Split split_dates(const std::vector<std::string>& dates, const SplitSpec& spec);

} // namespace mktcube::data
