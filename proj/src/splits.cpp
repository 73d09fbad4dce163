#include "mktcube/splits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mktcube::data {

namespace {

// Table-2 trading-day counts.
constexpr double kTrainDays = 3265.0;
constexpr double kValDays = 754.0;
constexpr double kBacktestDays = 504.0;
constexpr double kTotalDays = kTrainDays + kValDays + kBacktestDays;

Split from_counts(int n_days, int n_train, int n_val, int n_backtest) {
    if (n_train < 0 || n_val < 0 || n_backtest < 0) {
        throw std::invalid_argument("split: negative partition size");
    }
    if (n_train + n_val + n_backtest != n_days) {
        throw std::invalid_argument("split: partition sizes " + std::to_string(n_train) + "+" +
                                    std::to_string(n_val) + "+" + std::to_string(n_backtest) +
                                    " do not cover " + std::to_string(n_days) + " days");
    }
    if (n_train == 0) throw std::invalid_argument("split: empty training partition");
    Split s;
    for (int i = 0; i < n_train; ++i) s.train.push_back(i);
    for (int i = n_train; i < n_train + n_val; ++i) s.validation.push_back(i);
    for (int i = n_train + n_val; i < n_days; ++i) s.backtest.push_back(i);
    return s;
}

} // namespace

Split split_dates(int n_days, const SplitSpec& spec) {
    if (n_days <= 0) throw std::invalid_argument("split: no days");
    if (spec.train_end || spec.val_end) {
        throw std::invalid_argument("split: date boundaries need the date list overload");
    }
    int n_train, n_val, n_backtest;
    if (spec.train_days || spec.val_days || spec.backtest_days) {
        if (!(spec.train_days && spec.val_days)) {
            throw std::invalid_argument("split: explicit counts need at least train_days and val_days");
        }
        n_train = *spec.train_days;
        n_val = *spec.val_days;
        n_backtest = spec.backtest_days ? *spec.backtest_days : n_days - n_train - n_val;
    } else {
        n_train = static_cast<int>(std::llround(n_days * kTrainDays / kTotalDays));
        n_val = static_cast<int>(std::llround(n_days * kValDays / kTotalDays));
        n_backtest = n_days - n_train - n_val;
    }
    return from_counts(n_days, n_train, n_val, n_backtest);
}

Split split_dates(const std::vector<std::string>& dates, const SplitSpec& spec) {
    const int n = static_cast<int>(dates.size());
    if (!std::is_sorted(dates.begin(), dates.end())) {
        throw std::invalid_argument("split: dates must be chronological");
    }
    if (!(spec.train_end || spec.val_end)) return split_dates(n, spec);
    if (!(spec.train_end && spec.val_end)) {
        throw std::invalid_argument("split: both train_end and val_end are required for date boundaries");
    }
    if (*spec.val_end < *spec.train_end) {
        throw std::invalid_argument("split: backtest boundary " + *spec.val_end + " precedes train boundary " +
                                    *spec.train_end);
    }
    // Boundary day belongs to the later partition.
    auto t_end = std::lower_bound(dates.begin(), dates.end(), *spec.train_end) - dates.begin();
    auto v_end = std::lower_bound(dates.begin(), dates.end(), *spec.val_end) - dates.begin();
    return from_counts(n, static_cast<int>(t_end), static_cast<int>(v_end - t_end), static_cast<int>(n - v_end));
}

} // namespace mktcube::data
