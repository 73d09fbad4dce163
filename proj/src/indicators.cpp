#include "mktcube/indicators.hpp"

#include "mktcube/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mktcube::data {

FillMode parse_fill_mode(const std::string& s) {
    if (s == "carry-forward") return FillMode::CarryForward;
    if (s == "paper-backward") return FillMode::PaperBackward;
    throw ConfigError("unknown fill mode '" + s + "' (expected carry-forward or paper-backward)");
}

int IndicatorConfig::warmup_days() const {
    // ADXR needs 1 (TR) + dmi (smoothing) + dmi-1 (ADX seed) + dmi (ADXR lag).
    int adxr = 3 * dmi_period;
    int macd = macd_slow + macd_signal - 2;
    int cumret = 30;
    return std::max({adxr, macd, cumret, boll_period - 1, rsi_period, roc_period, momentum_period});
}

std::vector<std::string> indicator_names(const IndicatorConfig& cfg) {
    auto num = [](int v) { return std::to_string(v); };
    std::vector<std::string> names = {
        "close_to_open", "high_to_open", "low_to_open", "close_to_high", "close_to_low", "high_to_low",
        "ret_1", "ret_2", "ret_3", "ret_4", "ret_5",
        "cumret_5", "cumret_10", "cumret_15", "cumret_20", "cumret_25", "cumret_30",
        "boll_pctb_" + num(cfg.boll_period),
        "boll_bandwidth_" + num(cfg.boll_period),
        "boll_upper_gap_" + num(cfg.boll_period),
        "boll_middle_gap_" + num(cfg.boll_period),
        "boll_lower_gap_" + num(cfg.boll_period),
        "plus_di_" + num(cfg.dmi_period),
        "minus_di_" + num(cfg.dmi_period),
        "dx_" + num(cfg.dmi_period),
        "adx_" + num(cfg.dmi_period),
        "adxr_" + num(cfg.dmi_period),
        "rsi_" + num(cfg.rsi_period),
        "macd_" + num(cfg.macd_fast) + "_" + num(cfg.macd_slow),
        "macd_signal_" + num(cfg.macd_signal),
        "macd_hist",
        "roc_" + num(cfg.roc_period),
        "momentum_" + num(cfg.momentum_period),
    };
    for (const char* n : kFundamentalNames) names.emplace_back(n);
    return names;
}

FilledFundamentals fill_fundamentals(const StockSeries& series, FillMode mode) {
    if (series.fundamentals.empty()) {
        throw std::invalid_argument("fill_fundamentals: series " + series.stock_id + " has no observations");
    }
    const int days = series.days();
    FilledFundamentals out;
    out.values = RowMat::Zero(days, kFundamentalCount);
    out.available.assign(days, false);

    if (mode == FillMode::CarryForward) {
        auto it = series.fundamentals.begin();
        const std::array<double, kFundamentalCount>* current = nullptr;
        for (int d = 0; d < days; ++d) {
            while (it != series.fundamentals.end() && it->first <= d) {
                current = &it->second;
                ++it;
            }
            if (current) {
                for (int k = 0; k < kFundamentalCount; ++k) out.values(d, k) = (*current)[k];
                out.available[d] = true;
            }
        }
    } else {
        auto it = series.fundamentals.rbegin();
        const std::array<double, kFundamentalCount>* current = nullptr;
        for (int d = days - 1; d >= 0; --d) {
            while (it != series.fundamentals.rend() && it->first >= d) {
                current = &it->second;
                ++it;
            }
            if (current) {
                for (int k = 0; k < kFundamentalCount; ++k) out.values(d, k) = (*current)[k];
                out.available[d] = true;
            }
        }
    }
    return out;
}

namespace {

// Simple-moving-average seeded EMA; defined from index period-1 of the input.
std::vector<double> ema(const std::vector<double>& x, int period) {
    std::vector<double> out(x.size(), 0.0);
    if (static_cast<int>(x.size()) < period) return out;
    double seed = 0.0;
    for (int i = 0; i < period; ++i) seed += x[i];
    seed /= period;
    out[period - 1] = seed;
    const double alpha = 2.0 / (period + 1.0);
    for (std::size_t i = period; i < x.size(); ++i) {
        out[i] = alpha * x[i] + (1.0 - alpha) * out[i - 1];
    }
    return out;
}

} // namespace

IndicatorPanel compute_indicators(const StockSeries& series, const IndicatorConfig& cfg) {
    series.validate();
    const int days = series.days();
    const auto names = indicator_names(cfg);
    const int n = static_cast<int>(names.size());

    IndicatorPanel panel;
    panel.names = names;
    panel.values = RowMat::Zero(days, n);
    panel.available.assign(days, false);

    const auto& c = series.close;
    const auto& o = series.open;
    const auto& h = series.high;
    const auto& l = series.low;

    const int warmup = cfg.warmup_days();
    FilledFundamentals fun = fill_fundamentals(series, cfg.fill);

    // --- per-day price ratios and returns ---
    for (int d = 0; d < days; ++d) {
        int j = 0;
        panel.values(d, j++) = c[d] / o[d];
        panel.values(d, j++) = h[d] / o[d];
        panel.values(d, j++) = l[d] / o[d];
        panel.values(d, j++) = c[d] / h[d];
        panel.values(d, j++) = c[d] / l[d];
        panel.values(d, j++) = h[d] / l[d];
        for (int k = 1; k <= 5; ++k) {
            panel.values(d, j++) = d >= k ? c[d] / c[d - k] - 1.0 : 0.0;
        }
        for (int k = 5; k <= 30; k += 5) {
            panel.values(d, j++) = d >= k ? c[d] / c[d - k] - 1.0 : 0.0;
        }
    }

    // --- Bollinger block (population sigma over the window) ---
    const int jb = 17;
    for (int d = cfg.boll_period - 1; d < days; ++d) {
        double sum = 0.0, sumsq = 0.0;
        for (int i = d - cfg.boll_period + 1; i <= d; ++i) {
            sum += c[i];
            sumsq += c[i] * c[i];
        }
        double mid = sum / cfg.boll_period;
        double var = std::max(0.0, sumsq / cfg.boll_period - mid * mid);
        double sigma = std::sqrt(var);
        double upper = mid + cfg.boll_k * sigma;
        double lower = mid - cfg.boll_k * sigma;
        panel.values(d, jb + 0) = upper > lower ? (c[d] - lower) / (upper - lower) : 0.5;
        panel.values(d, jb + 1) = (upper - lower) / mid;
        panel.values(d, jb + 2) = (upper - c[d]) / c[d];
        panel.values(d, jb + 3) = (mid - c[d]) / c[d];
        panel.values(d, jb + 4) = (lower - c[d]) / c[d];
    }

    // --- DMI block: Wilder-smoothed +DI/-DI, DX, ADX, ADXR ---
    {
        const int p = cfg.dmi_period;
        const int jd = 22;
        std::vector<double> tr(days, 0.0), pdm(days, 0.0), mdm(days, 0.0);
        for (int d = 1; d < days; ++d) {
            tr[d] = std::max({h[d] - l[d], std::abs(h[d] - c[d - 1]), std::abs(l[d] - c[d - 1])});
            double up = h[d] - h[d - 1];
            double down = l[d - 1] - l[d];
            pdm[d] = (up > down && up > 0) ? up : 0.0;
            mdm[d] = (down > up && down > 0) ? down : 0.0;
        }
        if (days > p) {
            std::vector<double> adx(days, 0.0);
            std::vector<bool> adx_ok(days, false);
            double s_tr = 0, s_pdm = 0, s_mdm = 0;
            for (int d = 1; d <= p; ++d) {
                s_tr += tr[d];
                s_pdm += pdm[d];
                s_mdm += mdm[d];
            }
            s_tr /= p;
            s_pdm /= p;
            s_mdm /= p;
            double adx_seed = 0.0;
            int dx_count = 0;
            for (int d = p; d < days; ++d) {
                if (d > p) {
                    s_tr = (s_tr * (p - 1) + tr[d]) / p;
                    s_pdm = (s_pdm * (p - 1) + pdm[d]) / p;
                    s_mdm = (s_mdm * (p - 1) + mdm[d]) / p;
                }
                double pdi = s_tr > 0 ? 100.0 * s_pdm / s_tr : 0.0;
                double mdi = s_tr > 0 ? 100.0 * s_mdm / s_tr : 0.0;
                double dx = (pdi + mdi) > 0 ? 100.0 * std::abs(pdi - mdi) / (pdi + mdi) : 0.0;
                panel.values(d, jd + 0) = pdi;
                panel.values(d, jd + 1) = mdi;
                panel.values(d, jd + 2) = dx;
                ++dx_count;
                if (dx_count <= p) {
                    adx_seed += dx;
                    if (dx_count == p) {
                        adx[d] = adx_seed / p;
                        adx_ok[d] = true;
                    }
                } else {
                    adx[d] = (adx[d - 1] * (p - 1) + dx) / p;
                    adx_ok[d] = true;
                }
                if (adx_ok[d]) panel.values(d, jd + 3) = adx[d];
                if (adx_ok[d] && d - p >= 0 && adx_ok[d - p]) {
                    panel.values(d, jd + 4) = 0.5 * (adx[d] + adx[d - p]);
                }
            }
        }
    }

    // --- RSI, Wilder smoothing ---
    {
        const int p = cfg.rsi_period;
        const int jr = 27;
        if (days > p) {
            double avg_gain = 0.0, avg_loss = 0.0;
            for (int d = 1; d <= p; ++d) {
                double delta = c[d] - c[d - 1];
                avg_gain += std::max(delta, 0.0);
                avg_loss += std::max(-delta, 0.0);
            }
            avg_gain /= p;
            avg_loss /= p;
            for (int d = p; d < days; ++d) {
                if (d > p) {
                    double delta = c[d] - c[d - 1];
                    avg_gain = (avg_gain * (p - 1) + std::max(delta, 0.0)) / p;
                    avg_loss = (avg_loss * (p - 1) + std::max(-delta, 0.0)) / p;
                }
                double rsi;
                if (avg_gain == 0.0 && avg_loss == 0.0) {
                    rsi = 50.0;  // flat series: neutral by convention
                } else if (avg_loss == 0.0) {
                    rsi = 100.0;
                } else {
                    rsi = 100.0 - 100.0 / (1.0 + avg_gain / avg_loss);
                }
                panel.values(d, jr) = rsi;
            }
        }
    }

    // --- MACD line / signal / histogram ---
    {
        const int jm = 28;
        std::vector<double> closes(c.begin(), c.end());
        auto ema_fast = ema(closes, cfg.macd_fast);
        auto ema_slow = ema(closes, cfg.macd_slow);
        int line_start = cfg.macd_slow - 1;
        if (days > line_start) {
            std::vector<double> line(days - line_start);
            for (int d = line_start; d < days; ++d) line[d - line_start] = ema_fast[d] - ema_slow[d];
            auto signal = ema(line, cfg.macd_signal);
            int sig_start = line_start + cfg.macd_signal - 1;
            for (int d = line_start; d < days; ++d) panel.values(d, jm) = line[d - line_start];
            for (int d = sig_start; d < days; ++d) {
                panel.values(d, jm + 1) = signal[d - line_start];
                panel.values(d, jm + 2) = line[d - line_start] - signal[d - line_start];
            }
        }
    }

    // --- ROC and momentum ---
    for (int d = cfg.roc_period; d < days; ++d) {
        panel.values(d, 31) = 100.0 * (c[d] - c[d - cfg.roc_period]) / c[d - cfg.roc_period];
    }
    for (int d = cfg.momentum_period; d < days; ++d) {
        panel.values(d, 32) = c[d] - c[d - cfg.momentum_period];
    }

    // --- fundamentals ---
    for (int d = 0; d < days; ++d) {
        for (int k = 0; k < kFundamentalCount; ++k) panel.values(d, 33 + k) = fun.values(d, k);
    }

    for (int d = 0; d < days; ++d) {
        panel.available[d] = d >= warmup && fun.available[d];
    }
    return panel;
}

} // namespace mktcube::data
