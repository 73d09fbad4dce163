#include "mktcube/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace mktcube::data {

const std::vector<int>& Dataset::part_days(Part p) const {
    switch (p) {
        case Part::Train: return split.train;
        case Part::Validation: return split.validation;
        default: return split.backtest;
    }
}

namespace {

void finish_dataset(Dataset& ds, const SplitSpec& split_spec) {
    ds.split = split_dates(ds.dates, split_spec);
    std::vector<MarketImage> train_images;
    train_images.reserve(ds.split.train.size());
    for (int d : ds.split.train) {
        MarketImage img;
        img.date = ds.dates[static_cast<std::size_t>(d)];
        img.stock_order = ds.stock_order;
        img.indicator_names = ds.indicator_names;
        img.values = ds.images_raw[static_cast<std::size_t>(d)];
        train_images.push_back(std::move(img));
    }
    ds.stats = fit_norm(train_images);
    ds.images_norm.reserve(ds.images_raw.size());
    for (const auto& raw : ds.images_raw) ds.images_norm.push_back(apply_norm(raw, ds.stats));
}

} // namespace

Dataset build_dataset(const std::vector<StockSeries>& series, const DatasetConfig& cfg) {
    UniverseIndicators universe = compute_universe(series, cfg.indicators);

    Dataset ds;
    ds.stock_order = universe.stock_order;
    ds.indicator_names = universe.indicator_names;
    ds.lookback = cfg.lookback;
    for (const auto& s : universe.series) ds.sector_ids.push_back(s.sector_id);

    // Eligible days: every stock has an available indicator row.
    const int all_days = static_cast<int>(universe.dates.size());
    std::vector<int> eligible;
    for (int d = 0; d < all_days; ++d) {
        bool ok = true;
        for (const auto& p : universe.panels) {
            if (!p.available[d]) {
                ok = false;
                break;
            }
        }
        if (ok) eligible.push_back(d);
    }
    if (eligible.empty()) throw std::invalid_argument("build_dataset: no day has a complete market image");

    LabelPanel full_labels = compute_labels(universe.series, cfg.horizons, cfg.sigma_window);

    const int m = static_cast<int>(universe.series.size());
    const int n = static_cast<int>(universe.indicator_names.size());
    ds.labels.stock_ids = ds.stock_order;
    ds.labels.horizons = cfg.horizons;
    for (int d : eligible) {
        ds.dates.push_back(universe.dates[static_cast<std::size_t>(d)]);
        RowMat img(m, n);
        for (int i = 0; i < m; ++i) img.row(i) = universe.panels[static_cast<std::size_t>(i)].values.row(d);
        ds.images_raw.push_back(std::move(img));
        ds.labels.dates.push_back(universe.dates[static_cast<std::size_t>(d)]);
        ds.labels.entries.push_back(full_labels.entries[static_cast<std::size_t>(d)]);
    }

    finish_dataset(ds, cfg.split);
    return ds;
}

Dataset build_dataset(const MarketCube& cube, const LabelPanel& labels, const SplitSpec& split_spec,
                      const std::vector<int>& sector_ids, int lookback) {
    if (static_cast<int>(sector_ids.size()) != cube.stocks()) {
        throw std::invalid_argument("build_dataset: sector ids do not match the cube stock order");
    }
    Dataset ds;
    ds.dates = cube.dates;
    ds.stock_order = cube.stock_order;
    ds.indicator_names = cube.indicator_names;
    ds.sector_ids = sector_ids;
    ds.lookback = lookback;

    if (labels.stock_ids != cube.stock_order) {
        throw std::invalid_argument("build_dataset: label stock order does not match the cube");
    }
    ds.labels.stock_ids = labels.stock_ids;
    ds.labels.horizons = labels.horizons;
    for (const auto& date : cube.dates) {
        auto it = std::find(labels.dates.begin(), labels.dates.end(), date);
        if (it == labels.dates.end()) {
            throw std::invalid_argument("build_dataset: no labels for cube date " + date);
        }
        ds.labels.dates.push_back(date);
        ds.labels.entries.push_back(labels.entries[static_cast<std::size_t>(it - labels.dates.begin())]);
    }
    for (int t = 0; t < cube.days(); ++t) ds.images_raw.emplace_back(cube.day(t));

    finish_dataset(ds, split_spec);
    return ds;
}

std::vector<Sample> collect_samples(const Dataset& ds, Part part, int horizon, int* invalid_count) {
    const auto& day_list = ds.part_days(part);
    int hidx = ds.labels.horizon_index(horizon);
    std::vector<Sample> out;
    int invalid = 0;
    for (int d : day_list) {
        if (d < ds.lookback - 1) continue;  // no full window yet
        for (int i = 0; i < ds.stocks(); ++i) {
            const LabelEntry& e = ds.labels.entries[static_cast<std::size_t>(d)][static_cast<std::size_t>(i)]
                                                   [static_cast<std::size_t>(hidx)];
            if (!e.valid) {
                ++invalid;
                continue;
            }
            out.push_back(Sample{d, i, e.scaled, e.raw});
        }
    }
    if (invalid_count) *invalid_count = invalid;
    return out;
}

} // namespace mktcube::data
