#include "mktcube/synth.hpp"

#include "mktcube/rng.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mktcube::data {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int d[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return d[m - 1];
}

/// Weekday (Mon-Fri) calendar of `count` ISO dates starting 2000-01-03.
std::vector<std::string> trading_calendar(int count) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(count));
    int y = 2000, m = 1, d = 3;
    int weekday = 1;  // 2000-01-03 is a Monday
    while (static_cast<int>(out.size()) < count) {
        if (weekday <= 5) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
            out.emplace_back(buf);
        }
        ++d;
        weekday = weekday % 7 + 1;
        if (d > days_in_month(y, m)) {
            d = 1;
            if (++m > 12) {
                m = 1;
                ++y;
            }
        }
    }
    return out;
}

double ar1_step(double prev, double rho, double stationary_sigma, std::mt19937_64& g) {
    double innov_sigma = stationary_sigma * std::sqrt(std::max(0.0, 1.0 - rho * rho));
    return rho * prev + rng::normal(g, 0.0, innov_sigma);
}

// Sector-specific kinked/curved response to the market factor, in units of
// the factor sigma.
double nonlinear_response(int sector, double f, double sigma) {
    double x = f / sigma;
    switch (sector % 5) {
        case 0: return std::max(x, 0.0);
        case 1: return -std::max(-x, 0.0);
        case 2: return std::abs(x) - 0.79788456080286541;  // centered |x| for standard normal x
        case 3: return std::sin(1.5 * x);
        default: return std::max(x * x - 1.0, -1.0) * 0.5;
    }
}

} // namespace

std::vector<StockSeries> synth_market(const SynthConfig& cfg) {
    if (cfg.stocks < cfg.sectors || cfg.sectors < 1) {
        throw std::invalid_argument("synth_market: need stocks >= sectors >= 1");
    }
    if (cfg.days < 2) throw std::invalid_argument("synth_market: need at least 2 days");

    auto g_beta = rng::stream(cfg.seed, "synth:beta");
    auto g_factor = rng::stream(cfg.seed, "synth:factor");
    auto g_idio = rng::stream(cfg.seed, "synth:idio");
    auto g_ohlc = rng::stream(cfg.seed, "synth:ohlc");
    auto g_fund = rng::stream(cfg.seed, "synth:fundamental");

    const auto calendar = trading_calendar(cfg.days);

    std::vector<StockSeries> series(static_cast<std::size_t>(cfg.stocks));
    std::vector<double> beta_mkt(cfg.stocks), beta_sec(cfg.stocks);
    for (int i = 0; i < cfg.stocks; ++i) {
        StockSeries& s = series[static_cast<std::size_t>(i)];
        char id[16];
        std::snprintf(id, sizeof(id), "S%03d", i);
        s.stock_id = id;
        s.sector_id = i % cfg.sectors;
        s.subsector_id = (i / cfg.sectors) % cfg.subsectors_per_sector;
        s.dates = calendar;
        beta_mkt[i] = rng::uniform(g_beta, cfg.beta_mkt_min, cfg.beta_mkt_max);
        beta_sec[i] = rng::uniform(g_beta, cfg.beta_sec_min, cfg.beta_sec_max);
    }

    // Factor paths.
    std::vector<double> f_mkt(cfg.days);
    std::vector<std::vector<double>> f_sec(static_cast<std::size_t>(cfg.sectors), std::vector<double>(cfg.days));
    f_mkt[0] = rng::normal(g_factor, 0.0, cfg.factor_sigma);
    for (int d = 1; d < cfg.days; ++d) f_mkt[d] = ar1_step(f_mkt[d - 1], cfg.market_ar, cfg.factor_sigma, g_factor);
    for (int sec = 0; sec < cfg.sectors; ++sec) {
        auto& f = f_sec[static_cast<std::size_t>(sec)];
        f[0] = rng::normal(g_factor, 0.0, cfg.factor_sigma);
        for (int d = 1; d < cfg.days; ++d) f[d] = ar1_step(f[d - 1], cfg.sector_ar, cfg.factor_sigma, g_factor);
    }

    for (int i = 0; i < cfg.stocks; ++i) {
        StockSeries& s = series[static_cast<std::size_t>(i)];
        const int sec = s.sector_id;
        s.open.resize(cfg.days);
        s.high.resize(cfg.days);
        s.low.resize(cfg.days);
        s.close.resize(cfg.days);
        s.volume.resize(cfg.days);

        double idio = 0.0;
        double base_close = 50.0 + 100.0 * rng::uniform(g_ohlc, 0.0, 1.0);
        double base_volume = 1e6 * std::exp(rng::normal(g_ohlc, 0.0, 0.5));
        double prev_close = base_close;
        for (int d = 0; d < cfg.days; ++d) {
            idio = d == 0 ? rng::normal(g_idio, 0.0, cfg.idio_sigma)
                          : ar1_step(idio, cfg.idio_ar, cfg.idio_sigma, g_idio);
            double r = beta_mkt[i] * f_mkt[d] + beta_sec[i] * f_sec[static_cast<std::size_t>(sec)][d] + idio;
            if (cfg.nonlinear) {
                r += cfg.nonlinear_scale * nonlinear_response(sec, f_mkt[d], cfg.factor_sigma);
            }
            double close = prev_close * std::exp(r);
            double open = prev_close * std::exp(rng::normal(g_ohlc, 0.0, 0.3 * cfg.idio_sigma));
            double span_hi = std::abs(rng::normal(g_ohlc, 0.0, 0.5 * cfg.factor_sigma));
            double span_lo = std::abs(rng::normal(g_ohlc, 0.0, 0.5 * cfg.factor_sigma));
            s.open[d] = open;
            s.close[d] = close;
            s.high[d] = std::max(open, close) * std::exp(span_hi);
            s.low[d] = std::min(open, close) * std::exp(-span_lo);
            s.volume[d] = base_volume * std::exp(rng::normal(g_ohlc, 0.0, 0.3));
            prev_close = close;
        }

        // Quarterly fundamentals from slow AR(1) processes around per-stock means.
        static const double mu[kFundamentalCount] = {2.0, 1.5, 0.8, 2.5, 12.0, 18.0, 3.0};
        static const double sd[kFundamentalCount] = {0.2, 0.1, 0.05, 0.1, 1.0, 1.5, 0.3};
        std::array<double, kFundamentalCount> level{};
        for (int k = 0; k < kFundamentalCount; ++k) {
            level[static_cast<std::size_t>(k)] = mu[k] + rng::normal(g_fund, 0.0, sd[k]);
        }
        for (int d = 0; d < cfg.days; d += cfg.fundamental_period) {
            if (d > 0) {
                for (int k = 0; k < kFundamentalCount; ++k) {
                    double& x = level[static_cast<std::size_t>(k)];
                    x = mu[k] + 0.95 * (x - mu[k]) + rng::normal(g_fund, 0.0, sd[k] * 0.3);
                }
            }
            s.fundamentals[d] = level;
        }
        s.validate();
    }
    return series;
}

std::vector<StockSeries> synth_market(std::uint64_t seed, int m_stocks, int n_sectors, int n_days) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.stocks = m_stocks;
    cfg.sectors = n_sectors;
    cfg.days = n_days;
    return synth_market(cfg);
}

} // namespace mktcube::data
