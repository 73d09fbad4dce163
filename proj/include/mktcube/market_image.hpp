#pragma once

#include "mktcube/indicators.hpp"
#include "mktcube/series.hpp"

#include <string>
#include <vector>

namespace mktcube::data {

/// One trading day's m x n snapshot: rows are stocks grouped contiguously by
/// (sector, subsector, stock_id), columns are the indicator manifest.
struct MarketImage {
    std::string date;
    std::vector<std::string> stock_order;
    std::vector<std::string> indicator_names;
    RowMat values;  // m x n

    int stocks() const { return static_cast<int>(values.rows()); }
    int indicators() const { return static_cast<int>(values.cols()); }
};

/// t stacked market images sharing stock order and indicator manifest.
struct MarketCube {
    std::vector<std::string> dates;
    std::vector<std::string> stock_order;
    std::vector<std::string> indicator_names;
    Eigen::ArrayXd values;  // flat (t, m, n), row-major

    int days() const { return static_cast<int>(dates.size()); }
    int stocks() const { return static_cast<int>(stock_order.size()); }
    int indicators() const { return static_cast<int>(indicator_names.size()); }

    Eigen::Map<const RowMat> day(int t) const {
        return {values.data() + static_cast<Eigen::Index>(t) * stocks() * indicators(), stocks(), indicators()};
    }
};

/// Precomputed indicator panels for a universe, rows presorted by
/// (sector_id, subsector_id, stock_id). All series must share one calendar.
struct UniverseIndicators {
    std::vector<StockSeries> series;        // sorted copy
    std::vector<IndicatorPanel> panels;     // aligned with series
    std::vector<std::string> dates;         // shared calendar
    std::vector<std::string> stock_order;
    std::vector<std::string> indicator_names;
};

UniverseIndicators compute_universe(const std::vector<StockSeries>& series, const IndicatorConfig& cfg);

/// Assembles the image for one date; every stock must have an available
/// indicator row there.
MarketImage build_image(const UniverseIndicators& universe, const std::string& date);

/// Convenience wrapper over compute_universe + build_image.
MarketImage build_image(const std::vector<StockSeries>& series, const std::string& date,
                        const IndicatorConfig& cfg);

/// Per-indicator min/max over the training period only.
struct NormStats {
    std::vector<std::string> names;
    Eigen::ArrayXd min;
    Eigen::ArrayXd max;
    std::vector<bool> degenerate;  // max == min, column maps to 0

    int degenerate_count() const {
        int k = 0;
        for (bool d : degenerate) k += d ? 1 : 0;
        return k;
    }
};

NormStats fit_norm(const std::vector<MarketImage>& train_images);

/// Min-max scaling with the training stats; values outside the training range
/// are not clamped and may leave [0,1].
MarketImage apply_norm(const MarketImage& image, const NormStats& stats);
RowMat apply_norm(const RowMat& values, const NormStats& stats);

MarketCube make_cube(const std::vector<MarketImage>& images);

/// Binary cube file, magic "MKCB"; values, stock order, dates and indicator
/// names round trip bit-exactly.
void save_cube(const std::string& path, const MarketCube& cube);
MarketCube load_cube(const std::string& path);

} // namespace mktcube::data
