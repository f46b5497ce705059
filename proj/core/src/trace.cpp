#include "dmapar/trace.hpp"

#include "dmapar/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace dmapar {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

TraceSeries parse_trace(std::istream& in, const std::string& flow_id) {
    TraceSeries trace;
    trace.flow_id = flow_id;
    std::string line;
    std::size_t lineno = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = trim(line);
        if (view.empty()) continue;
        auto comma = view.find(',');
        if (comma == std::string_view::npos)
            fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected two columns");
        std::string_view f0 = view.substr(0, comma);
        std::string_view f1 = view.substr(comma + 1);
        if (f1.find(',') != std::string_view::npos)
            fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected two columns");
        double ts = 0.0, size = 0.0;
        bool ok0 = parse_double(f0, ts);
        bool ok1 = parse_double(f1, size);
        if (!seen_content && !ok0 && !ok1) {
            seen_content = true;  // header row
            continue;
        }
        seen_content = true;
        if (!ok0 || !ok1)
            fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": malformed row '" +
                                       std::string(view) + "'");
        if (size < 0.0)
            fail(ErrorCode::Parse, "line " + std::to_string(lineno) + ": negative size");
        trace.records.push_back({ts, size});
    }
    if (trace.records.empty()) fail(ErrorCode::EmptyTrace, "trace has no records");
    std::stable_sort(trace.records.begin(), trace.records.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.timestamp < b.timestamp; });
    return trace;
}

TraceSeries load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open trace file " + path);
    return parse_trace(in, path);
}

void write_trace_csv(std::ostream& out, const DiscretizedTrace& disc) {
    out << "timestamp_s,size_bytes\n";
    out << std::setprecision(17);
    for (std::size_t t = 0; t < disc.a.size(); ++t) {
        if (disc.a[t] <= 0.0) continue;
        out << static_cast<double>(t + 1) * disc.dt << ',' << disc.a[t] << '\n';
    }
}

double default_dt(const TraceSeries& trace) {
    const auto& r = trace.records;
    if (r.size() < 2) fail(ErrorCode::Undefined, "default dt needs at least 2 records");
    double span = r.back().timestamp - r.front().timestamp;
    if (!(span > 0.0)) fail(ErrorCode::Undefined, "all inter-arrival times are zero");
    double mean_iat = span / static_cast<double>(r.size() - 1);
    return mean_iat / 40.0;
}

DiscretizedTrace discretize(const TraceSeries& trace, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "dt must be positive");
    DiscretizedTrace out;
    out.dt = dt;
    if (trace.records.empty()) return out;
    const double t0 = trace.records.front().timestamp;
    for (const auto& rec : trace.records) {
        double x = (rec.timestamp - t0) / dt;
        // Relative slack keeps exact multiples of dt in the closing slot.
        double k = std::ceil(x - 1e-9 * std::max(1.0, x));
        std::size_t slot = static_cast<std::size_t>(std::max(1.0, k));
        if (out.a.size() < slot) out.a.resize(slot, 0.0);
        out.a[slot - 1] += rec.size;
    }
    while (!out.a.empty() && out.a.back() == 0.0) out.a.pop_back();
    return out;
}

DemodulatedTrace demodulate(const DiscretizedTrace& disc) {
    DemodulatedTrace d;
    const auto& a = disc.a;
    d.first_on = !a.empty() && a.front() > 0.0;
    std::size_t i = 0;
    while (i < a.size()) {
        bool on = a[i] > 0.0;
        std::size_t j = i;
        while (j < a.size() && (a[j] > 0.0) == on) {
            if (on) d.y.push_back(a[j]);
            ++j;
        }
        (on ? d.tau_on : d.tau_off).push_back(j - i);
        i = j;
    }
    return d;
}

DiscretizedTrace remodulate(const DemodulatedTrace& demod, double dt) {
    DiscretizedTrace out;
    out.dt = dt;
    std::size_t ion = 0, ioff = 0, iy = 0;
    bool on = demod.first_on;
    while (ion < demod.tau_on.size() || ioff < demod.tau_off.size()) {
        if (on && ion < demod.tau_on.size()) {
            for (std::uint64_t k = 0; k < demod.tau_on[ion]; ++k) {
                if (iy >= demod.y.size())
                    fail(ErrorCode::InvalidArgument, "amplitude series shorter than on runs");
                out.a.push_back(demod.y[iy++]);
            }
            ++ion;
        } else if (!on && ioff < demod.tau_off.size()) {
            out.a.insert(out.a.end(), demod.tau_off[ioff], 0.0);
            ++ioff;
        }
        on = !on;
    }
    return out;
}

double hurst(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 64) fail(ErrorCode::InsufficientData, "hurst needs at least 64 samples");
    std::vector<double> lx, ly;
    for (std::size_t m = 1; n / m >= 32; m *= 2) {
        std::size_t nb = n / m;
        std::vector<double> means(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += series[b * m + k];
            means[b] = s / static_cast<double>(m);
        }
        double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(nb);
        double var = 0.0;
        for (double v : means) var += (v - mu) * (v - mu);
        var /= static_cast<double>(nb);
        if (m == 1 && !(var > 0.0))
            fail(ErrorCode::InsufficientData, "series has insufficient variance");
        if (var > 0.0) {
            lx.push_back(std::log(static_cast<double>(m)));
            ly.push_back(std::log(var));
        }
    }
    if (lx.size() < 2) fail(ErrorCode::InsufficientData, "too few aggregation levels");
    double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    double h = 1.0 + 0.5 * (sxy / sxx);
    return std::clamp(h, 1e-9, 1.0 - 1e-9);
}

double cv(std::span<const double> series) {
    if (series.empty()) fail(ErrorCode::Undefined, "cv of an empty series");
    double n = static_cast<double>(series.size());
    double mu = std::accumulate(series.begin(), series.end(), 0.0) / n;
    if (mu == 0.0) fail(ErrorCode::Undefined, "cv undefined for zero mean");
    double var = 0.0;
    for (double v : series) var += (v - mu) * (v - mu);
    return std::sqrt(var / n) / std::abs(mu);
}

}  // namespace dmapar
