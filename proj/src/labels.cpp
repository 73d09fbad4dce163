#include "mktcube/labels.hpp"

#include "mktcube/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mktcube::data {

std::vector<int> default_horizons() { return {1, 5, 15, 30}; }

int LabelPanel::horizon_index(int horizon) const {
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (horizons[i] == horizon) return static_cast<int>(i);
    }
    throw std::invalid_argument("LabelPanel: horizon " + std::to_string(horizon) + " not present");
}

const LabelEntry& LabelPanel::at(int date_idx, int stock_idx, int horizon) const {
    return entries[date_idx][stock_idx][horizon_index(horizon)];
}

LabelEntry compute_label(const StockSeries& series, int day_index, int horizon, int sigma_window) {
    LabelEntry e;
    const int days = series.days();
    // sigma over the sigma_window daily returns ending at day_index-1 needs
    // closes back to day_index - sigma_window - 1.
    if (day_index - sigma_window - 1 < 0 || day_index + horizon >= days) return e;

    double mean = 0.0;
    std::vector<double> rets(static_cast<std::size_t>(sigma_window));
    for (int k = 0; k < sigma_window; ++k) {
        int d = day_index - sigma_window + k;  // return of day d: close[d]/close[d-1] - 1
        rets[static_cast<std::size_t>(k)] = series.close[d] / series.close[d - 1] - 1.0;
        mean += rets[static_cast<std::size_t>(k)];
    }
    mean /= sigma_window;
    double var = 0.0;
    for (double r : rets) var += (r - mean) * (r - mean);
    var /= sigma_window;  // population sigma
    double sigma = std::sqrt(var);

    e.raw = series.close[day_index + horizon] / series.close[day_index] - 1.0;
    if (sigma < kSigmaFloor) {
        e.valid = false;  // excluded from training
        return e;
    }
    e.scaled = e.raw / sigma;
    e.valid = true;
    return e;
}

LabelPanel compute_labels(const std::vector<StockSeries>& sorted_series, const std::vector<int>& horizons,
                          int sigma_window) {
    if (sorted_series.empty()) throw std::invalid_argument("compute_labels: no series");
    LabelPanel panel;
    panel.dates = sorted_series.front().dates;
    panel.horizons = horizons;
    for (const auto& s : sorted_series) {
        if (s.dates != panel.dates) {
            throw std::invalid_argument("compute_labels: stock " + s.stock_id + " is not on the shared calendar");
        }
        panel.stock_ids.push_back(s.stock_id);
    }
    const int days = static_cast<int>(panel.dates.size());
    panel.entries.resize(days);
    for (int d = 0; d < days; ++d) {
        panel.entries[d].resize(sorted_series.size());
        for (std::size_t i = 0; i < sorted_series.size(); ++i) {
            panel.entries[d][i].resize(horizons.size());
            for (std::size_t hidx = 0; hidx < horizons.size(); ++hidx) {
                panel.entries[d][i][hidx] = compute_label(sorted_series[i], d, horizons[hidx], sigma_window);
            }
        }
    }
    return panel;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void save_labels_csv(const std::string& path, const LabelPanel& panel) {
    std::ofstream out(path);
    if (!out) throw IoError("save_labels_csv: cannot open " + path);
    out << "date,stock_id,horizon,raw,scaled,valid\n";
    for (std::size_t d = 0; d < panel.dates.size(); ++d) {
        for (std::size_t i = 0; i < panel.stock_ids.size(); ++i) {
            for (std::size_t h = 0; h < panel.horizons.size(); ++h) {
                const LabelEntry& e = panel.entries[d][i][h];
                out << panel.dates[d] << "," << panel.stock_ids[i] << "," << panel.horizons[h] << ","
                    << fmt(e.raw) << "," << fmt(e.scaled) << "," << (e.valid ? 1 : 0) << "\n";
            }
        }
    }
}

LabelPanel load_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("load_labels_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("load_labels_csv: empty file " + path);

    // Gather in encounter order; dates and stocks form a dense grid.
    std::vector<std::string> dates, stocks;
    std::map<std::string, int> date_idx, stock_idx;
    std::vector<int> horizons;
    std::map<int, int> horizon_idx;
    struct Row {
        int d, s, h;
        LabelEntry e;
    };
    std::vector<Row> rows;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string date, stock, hs, raw, scaled, valid;
        std::getline(ss, date, ',');
        std::getline(ss, stock, ',');
        std::getline(ss, hs, ',');
        std::getline(ss, raw, ',');
        std::getline(ss, scaled, ',');
        std::getline(ss, valid, ',');
        if (valid.empty()) throw IoError("load_labels_csv: short row '" + line + "'");
        if (!date_idx.count(date)) {
            date_idx[date] = static_cast<int>(dates.size());
            dates.push_back(date);
        }
        if (!stock_idx.count(stock)) {
            stock_idx[stock] = static_cast<int>(stocks.size());
            stocks.push_back(stock);
        }
        int h = std::stoi(hs);
        if (!horizon_idx.count(h)) {
            horizon_idx[h] = static_cast<int>(horizons.size());
            horizons.push_back(h);
        }
        Row r;
        r.d = date_idx[date];
        r.s = stock_idx[stock];
        r.h = horizon_idx[h];
        r.e.raw = std::stod(raw);
        r.e.scaled = std::stod(scaled);
        r.e.valid = valid == "1";
        rows.push_back(r);
    }

    LabelPanel panel;
    panel.dates = dates;
    panel.stock_ids = stocks;
    panel.horizons = horizons;
    panel.entries.assign(dates.size(),
                         std::vector<std::vector<LabelEntry>>(stocks.size(), std::vector<LabelEntry>(horizons.size())));
    for (const Row& r : rows) panel.entries[r.d][r.s][r.h] = r.e;
    return panel;
}

} // namespace mktcube::data
