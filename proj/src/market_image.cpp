#include "mktcube/market_image.hpp"

#include "mktcube/errors.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mktcube::data {

UniverseIndicators compute_universe(const std::vector<StockSeries>& series, const IndicatorConfig& cfg) {
    if (series.empty()) throw std::invalid_argument("compute_universe: empty universe");
    UniverseIndicators u;
    u.series = series;
    std::sort(u.series.begin(), u.series.end(), [](const StockSeries& a, const StockSeries& b) {
        return std::tie(a.sector_id, a.subsector_id, a.stock_id) < std::tie(b.sector_id, b.subsector_id, b.stock_id);
    });
    u.dates = u.series.front().dates;
    for (const auto& s : u.series) {
        if (s.dates != u.dates) {
            throw std::invalid_argument("compute_universe: stock " + s.stock_id + " is not on the shared calendar");
        }
        u.stock_order.push_back(s.stock_id);
    }
    u.indicator_names = indicator_names(cfg);
    u.panels.reserve(u.series.size());
    for (const auto& s : u.series) u.panels.push_back(compute_indicators(s, cfg));
    return u;
}

MarketImage build_image(const UniverseIndicators& universe, const std::string& date) {
    auto it = std::lower_bound(universe.dates.begin(), universe.dates.end(), date);
    if (it == universe.dates.end() || *it != date) {
        throw std::invalid_argument("build_image: unknown date " + date);
    }
    int d = static_cast<int>(it - universe.dates.begin());
    const int m = static_cast<int>(universe.series.size());
    const int n = static_cast<int>(universe.indicator_names.size());

    MarketImage img;
    img.date = date;
    img.stock_order = universe.stock_order;
    img.indicator_names = universe.indicator_names;
    img.values.resize(m, n);
    for (int i = 0; i < m; ++i) {
        if (!universe.panels[i].available[d]) {
            throw std::invalid_argument("build_image: stock " + universe.series[i].stock_id +
                                        " has no indicator data on " + date);
        }
        img.values.row(i) = universe.panels[i].values.row(d);
    }
    return img;
}

MarketImage build_image(const std::vector<StockSeries>& series, const std::string& date,
                        const IndicatorConfig& cfg) {
    return build_image(compute_universe(series, cfg), date);
}

NormStats fit_norm(const std::vector<MarketImage>& train_images) {
    if (train_images.empty()) throw std::invalid_argument("fit_norm: need at least one training image");
    const auto& first = train_images.front();
    const int n = first.indicators();
    NormStats stats;
    stats.names = first.indicator_names;
    stats.min = Eigen::ArrayXd::Constant(n, std::numeric_limits<double>::infinity());
    stats.max = Eigen::ArrayXd::Constant(n, -std::numeric_limits<double>::infinity());
    for (const auto& img : train_images) {
        if (img.indicators() != n) throw std::invalid_argument("fit_norm: inconsistent indicator count");
        for (int j = 0; j < n; ++j) {
            stats.min[j] = std::min(stats.min[j], img.values.col(j).minCoeff());
            stats.max[j] = std::max(stats.max[j], img.values.col(j).maxCoeff());
        }
    }
    stats.degenerate.assign(n, false);
    for (int j = 0; j < n; ++j) {
        if (!(stats.max[j] > stats.min[j])) stats.degenerate[j] = true;
    }
    return stats;
}

RowMat apply_norm(const RowMat& values, const NormStats& stats) {
    if (values.cols() != stats.min.size()) {
        throw std::invalid_argument("apply_norm: column count mismatch");
    }
    RowMat out(values.rows(), values.cols());
    for (int j = 0; j < values.cols(); ++j) {
        if (stats.degenerate[j]) {
            out.col(j).setZero();
        } else {
            out.col(j) = (values.col(j).array() - stats.min[j]) / (stats.max[j] - stats.min[j]);
        }
    }
    return out;
}

MarketImage apply_norm(const MarketImage& image, const NormStats& stats) {
    MarketImage out = image;
    out.values = apply_norm(image.values, stats);
    return out;
}

MarketCube make_cube(const std::vector<MarketImage>& images) {
    if (images.empty()) throw std::invalid_argument("make_cube: no images");
    const auto& first = images.front();
    MarketCube cube;
    cube.stock_order = first.stock_order;
    cube.indicator_names = first.indicator_names;
    const int m = first.stocks();
    const int n = first.indicators();
    cube.values.resize(static_cast<Eigen::Index>(images.size()) * m * n);
    for (std::size_t t = 0; t < images.size(); ++t) {
        const auto& img = images[t];
        if (img.stock_order != cube.stock_order) {
            throw std::invalid_argument("make_cube: image " + img.date + " has a different stock order");
        }
        if (img.indicator_names != cube.indicator_names) {
            throw std::invalid_argument("make_cube: image " + img.date + " has a different indicator manifest");
        }
        cube.dates.push_back(img.date);
        std::memcpy(cube.values.data() + static_cast<Eigen::Index>(t) * m * n, img.values.data(),
                    sizeof(double) * m * n);
    }
    return cube;
}

namespace {

constexpr char kCubeMagic[4] = {'M', 'K', 'C', 'B'};
constexpr std::uint32_t kCubeVersion = 1;

} // namespace

void save_cube(const std::string& path, const MarketCube& cube) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_cube: cannot open " + path);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto str = [&](const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
    };
    out.write(kCubeMagic, 4);
    u32(kCubeVersion);
    u32(static_cast<std::uint32_t>(cube.days()));
    u32(static_cast<std::uint32_t>(cube.stocks()));
    u32(static_cast<std::uint32_t>(cube.indicators()));
    for (const auto& d : cube.dates) str(d);
    for (const auto& s : cube.stock_order) str(s);
    for (const auto& n : cube.indicator_names) str(n);
    out.write(reinterpret_cast<const char*>(cube.values.data()),
              static_cast<std::streamsize>(cube.values.size() * 8));
}

MarketCube load_cube(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("load_cube: cannot open " + path);
    std::size_t offset = 0;
    auto read = [&](void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw IoError("load_cube: truncated file " + path + " at byte offset " + std::to_string(offset));
        }
        offset += n;
    };
    auto u32 = [&]() {
        std::uint32_t v;
        read(&v, 4);
        return v;
    };
    auto str = [&]() {
        std::uint32_t len = u32();
        if (len > (1u << 20)) throw IoError("load_cube: implausible string length at byte offset " + std::to_string(offset - 4));
        std::string s(len, '\0');
        read(s.data(), len);
        return s;
    };
    char magic[4];
    read(magic, 4);
    if (std::memcmp(magic, kCubeMagic, 4) != 0) throw IoError("load_cube: bad magic in " + path + " at byte offset 0");
    std::uint32_t version = u32();
    if (version != kCubeVersion) {
        throw IoError("load_cube: unsupported cube version " + std::to_string(version) + " at byte offset 4");
    }
    MarketCube cube;
    std::uint32_t t = u32(), m = u32(), n = u32();
    for (std::uint32_t i = 0; i < t; ++i) cube.dates.push_back(str());
    for (std::uint32_t i = 0; i < m; ++i) cube.stock_order.push_back(str());
    for (std::uint32_t i = 0; i < n; ++i) cube.indicator_names.push_back(str());
    cube.values.resize(static_cast<Eigen::Index>(t) * m * n);
    read(cube.values.data(), static_cast<std::size_t>(cube.values.size()) * 8);
    // Trailing garbage means the writer and reader disagree on layout.
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) throw IoError("load_cube: trailing bytes in " + path + " at byte offset " + std::to_string(offset));
    return cube;
}

} // namespace mktcube::data
