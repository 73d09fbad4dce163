#pragma once

#include "mktcube/series.hpp"

#include <cstdint>

namespace mktcube::data {

/// Sector-factor return generator. Per stock:
///   log-return = beta_mkt * F_mkt + beta_sec * F_sec(sector) + idio
/// Factors follow AR(1) processes with the given stationary sigmas, so a
/// positive AR coefficient plants cross-sectional predictability. The
/// nonlinear mode adds sector-specific kinked responses to the market factor,
/// which curves the cross-sector structure of the images.
struct SynthConfig {
    std::uint64_t seed = 42;
    int stocks = 20;
    int sectors = 4;
    int subsectors_per_sector = 2;
    int days = 600;

    double factor_sigma = 0.01;   // stationary sigma of market and sector factors
    double idio_sigma = 0.005;
    double beta_mkt_min = 0.5, beta_mkt_max = 1.5;
    double beta_sec_min = 0.3, beta_sec_max = 1.0;

    double market_ar = 0.3;
    double sector_ar = 0.7;
    double idio_ar = 0.2;

    bool nonlinear = false;
    double nonlinear_scale = 0.01;

    int fundamental_period = 63;  // trading days between observations
};

/// Deterministic under a fixed seed. Dates are a weekday calendar starting
/// 2000-01-03; OHLC is synthesized around the close path with valid bounds;
/// fundamentals are slow AR(1) processes observed quarterly from day 0.
std::vector<StockSeries> synth_market(const SynthConfig& cfg);

std::vector<StockSeries> synth_market(std::uint64_t seed, int m_stocks, int n_sectors, int n_days);

} // namespace mktcube::data
