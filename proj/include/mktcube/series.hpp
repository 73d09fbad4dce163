#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace mktcube::data {

constexpr int kFundamentalCount = 7;

/// Column order of the fundamentals CSV and of the fundamental block in the
/// indicator manifest.
extern const std::array<const char*, kFundamentalCount> kFundamentalNames;

/// Daily OHLCV history for one stock plus sparse quarterly fundamentals keyed
/// by trading-day index.
struct StockSeries {
    std::string stock_id;
    int sector_id = 0;
    int subsector_id = 0;
    std::vector<std::string> dates;  // strictly increasing ISO-8601
    std::vector<double> open, high, low, close, volume;
    std::map<int, std::array<double, kFundamentalCount>> fundamentals;

    int days() const { return static_cast<int>(dates.size()); }

    /// Index of an ISO date, -1 when absent.
    int find_date(const std::string& date) const;

    /// Enforces low <= min(open, close) <= max(open, close) <= high per day
    /// and strictly increasing dates.
    void validate() const;
};

/// Data directory layout:
///   universe.csv                stock_id,sector_id,subsector_id
///   prices/<stock_id>.csv       date,open,high,low,close,volume
///   fundamentals/<stock_id>.csv date,eps,cur_ratio,debt_to_equity,fncl_lvgr,
///                               return_tot_eqy,pe_ratio,short_int_ratio
void write_data_dir(const std::string& dir, const std::vector<StockSeries>& series);
std::vector<StockSeries> load_data_dir(const std::string& dir);

} // namespace mktcube::data
