#include "mktcube/series.hpp"

#include "mktcube/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace mktcube::data {

const std::array<const char*, kFundamentalCount> kFundamentalNames = {
    "eps", "cur_ratio", "debt_to_equity", "fncl_lvgr", "return_tot_eqy", "pe_ratio", "short_int_ratio"};

int StockSeries::find_date(const std::string& date) const {
    auto it = std::lower_bound(dates.begin(), dates.end(), date);
    if (it == dates.end() || *it != date) return -1;
    return static_cast<int>(it - dates.begin());
}

void StockSeries::validate() const {
    const std::size_t n = dates.size();
    if (open.size() != n || high.size() != n || low.size() != n || close.size() != n || volume.size() != n) {
        throw std::invalid_argument("series " + stock_id + ": column length mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double lo = std::min(open[i], close[i]);
        double hi = std::max(open[i], close[i]);
        if (!(low[i] <= lo && hi <= high[i])) {
            throw std::invalid_argument("series " + stock_id + ": OHLC bounds violated on " + dates[i]);
        }
        if (open[i] <= 0 || close[i] <= 0 || low[i] <= 0 || high[i] <= 0) {
            throw std::invalid_argument("series " + stock_id + ": non-positive price on " + dates[i]);
        }
        if (volume[i] < 0) {
            throw std::invalid_argument("series " + stock_id + ": negative volume on " + dates[i]);
        }
        if (i > 0 && !(dates[i - 1] < dates[i])) {
            throw std::invalid_argument("series " + stock_id + ": dates not strictly increasing at " + dates[i]);
        }
    }
    for (const auto& [day, _] : fundamentals) {
        if (day < 0 || day >= static_cast<int>(n)) {
            throw std::invalid_argument("series " + stock_id + ": fundamental observation off the date grid");
        }
    }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_num(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad numeric field '" + s + "' in " + context);
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_data_dir(const std::string& dir, const std::vector<StockSeries>& series) {
    fs::create_directories(fs::path(dir) / "prices");
    fs::create_directories(fs::path(dir) / "fundamentals");

    std::ofstream uni(fs::path(dir) / "universe.csv");
    uni << "stock_id,sector_id,subsector_id\n";
    for (const auto& s : series) {
        uni << s.stock_id << "," << s.sector_id << "," << s.subsector_id << "\n";
    }

    for (const auto& s : series) {
        std::ofstream px(fs::path(dir) / "prices" / (s.stock_id + ".csv"));
        px << "date,open,high,low,close,volume\n";
        for (int i = 0; i < s.days(); ++i) {
            px << s.dates[i] << "," << fmt(s.open[i]) << "," << fmt(s.high[i]) << "," << fmt(s.low[i]) << ","
               << fmt(s.close[i]) << "," << fmt(s.volume[i]) << "\n";
        }
        std::ofstream fu(fs::path(dir) / "fundamentals" / (s.stock_id + ".csv"));
        fu << "date";
        for (const char* n : kFundamentalNames) fu << "," << n;
        fu << "\n";
        for (const auto& [day, vals] : s.fundamentals) {
            fu << s.dates[day];
            for (double v : vals) fu << "," << fmt(v);
            fu << "\n";
        }
    }
}

std::vector<StockSeries> load_data_dir(const std::string& dir) {
    fs::path root(dir);
    fs::path uni_path = root / "universe.csv";
    if (!fs::exists(uni_path)) throw MissingInputError("missing input: " + uni_path.string());

    std::vector<StockSeries> series;
    {
        std::ifstream uni(uni_path);
        std::string line;
        if (!std::getline(uni, line)) throw IoError("empty universe manifest " + uni_path.string());
        while (std::getline(uni, line)) {
            if (line.empty()) continue;
            auto f = split_line(line);
            if (f.size() != 3) throw IoError("universe manifest: expected 3 fields, got line '" + line + "'");
            StockSeries s;
            s.stock_id = f[0];
            s.sector_id = static_cast<int>(parse_num(f[1], "universe.csv"));
            s.subsector_id = static_cast<int>(parse_num(f[2], "universe.csv"));
            series.push_back(std::move(s));
        }
    }
    if (series.empty()) throw IoError("universe manifest lists no stocks");

    for (auto& s : series) {
        fs::path px_path = root / "prices" / (s.stock_id + ".csv");
        if (!fs::exists(px_path)) throw MissingInputError("missing input: " + px_path.string());
        std::ifstream px(px_path);
        std::string line;
        std::getline(px, line);  // header
        while (std::getline(px, line)) {
            if (line.empty()) continue;
            auto f = split_line(line);
            if (f.size() != 6) throw IoError(px_path.string() + ": expected 6 fields in '" + line + "'");
            s.dates.push_back(f[0]);
            s.open.push_back(parse_num(f[1], px_path.string()));
            s.high.push_back(parse_num(f[2], px_path.string()));
            s.low.push_back(parse_num(f[3], px_path.string()));
            s.close.push_back(parse_num(f[4], px_path.string()));
            s.volume.push_back(parse_num(f[5], px_path.string()));
        }

        fs::path fu_path = root / "fundamentals" / (s.stock_id + ".csv");
        if (fs::exists(fu_path)) {
            std::ifstream fu(fu_path);
            std::getline(fu, line);  // header
            while (std::getline(fu, line)) {
                if (line.empty()) continue;
                auto f = split_line(line);
                if (f.size() != 1 + kFundamentalCount) {
                    throw IoError(fu_path.string() + ": expected " + std::to_string(1 + kFundamentalCount) +
                                  " fields in '" + line + "'");
                }
                int day = s.find_date(f[0]);
                if (day < 0) {
                    throw IoError(fu_path.string() + ": fundamental date " + f[0] + " not on the price grid");
                }
                std::array<double, kFundamentalCount> vals{};
                for (int k = 0; k < kFundamentalCount; ++k) vals[k] = parse_num(f[1 + k], fu_path.string());
                s.fundamentals[day] = vals;
            }
        }
        s.validate();
    }
    return series;
}

} // namespace mktcube::data
