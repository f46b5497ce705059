#include "dmapar/carrier.hpp"

#include "dmapar/error.hpp"

#include <cmath>

namespace dmapar {

const char* carrier_kind_name(CarrierKind k) {
    switch (k) {
        case CarrierKind::DualMap: return "dual_map";
        case CarrierKind::PointProcess: return "point_process";
        case CarrierKind::AlwaysOn: return "always_on";
    }
    return "unknown";
}

CarrierKind parse_carrier_kind(const std::string& s) {
    if (s == "dual_map") return CarrierKind::DualMap;
    if (s == "point_process") return CarrierKind::PointProcess;
    if (s == "always_on") return CarrierKind::AlwaysOn;
    fail(ErrorCode::InvalidArgument, "unknown carrier kind '" + s + "'");
}

CarrierMode CarrierMode::dual(DiscreteMap off, DiscreteMap on) {
    CarrierMode m;
    m.kind = CarrierKind::DualMap;
    m.dt = off.dt;
    m.map_off = std::move(off);
    m.map_on = std::move(on);
    return m;
}

CarrierMode CarrierMode::point(DiscreteMap off) {
    CarrierMode m;
    m.kind = CarrierKind::PointProcess;
    m.dt = off.dt;
    m.map_off = std::move(off);
    return m;
}

CarrierMode CarrierMode::always_on(double dt) {
    CarrierMode m;
    m.kind = CarrierKind::AlwaysOn;
    m.dt = dt;
    return m;
}

int embed_state(int o, int s_on, int s_off, int m1, int m2) {
    require(m1 >= 1 && m2 >= 1, ErrorCode::InvalidArgument, "embed_state needs m1, m2 >= 1");
    require(o == 0 || o == 1, ErrorCode::InvalidArgument, "phase indicator must be 0 or 1");
    require(s_on >= 0 && s_on < m2, ErrorCode::InvalidArgument, "s_on out of range");
    require(s_off >= 0 && s_off < m1, ErrorCode::InvalidArgument, "s_off out of range");
    return o * m1 * m2 + s_on * m1 + s_off;
}

Mat normalized_jumps(const Mat& d1, const char* which) {
    Mat p = d1;
    for (Eigen::Index i = 0; i < d1.rows(); ++i) {
        double s = d1.row(i).sum();
        if (!(s > 0.0))
            fail(ErrorCode::NonNormalizable, std::string(which) + ": D1 row " + std::to_string(i) +
                                                 " has zero sum");
        p.row(i) /= s;
    }
    return p;
}

CarrierChain build_q(const CarrierMode& mode) {
    CarrierChain c;
    c.mode = mode;
    switch (mode.kind) {
        case CarrierKind::DualMap: {
            require(mode.map_off && mode.map_on, ErrorCode::InvalidArgument,
                    "dual carrier needs both MAPs");
            const DiscreteMap& off = *mode.map_off;
            const DiscreteMap& on = *mode.map_on;
            off.validate(1e-9);
            on.validate(1e-9);
            require(std::abs(off.dt - on.dt) <= 1e-12 * std::max(off.dt, on.dt),
                    ErrorCode::InvalidArgument, "MAP^off and MAP^on must share dt");
            const int m1 = off.m(), m2 = on.m(), h = m1 * m2;
            Mat p_on = normalized_jumps(on.D1, "MAP^on");
            Mat p_off = normalized_jumps(off.D1, "MAP^off");
            Vec exit_off = off.D1.rowwise().sum();
            Vec exit_on = on.D1.rowwise().sum();
            Mat id1 = Mat::Identity(m1, m1), id2 = Mat::Identity(m2, m2);
            c.m1 = m1;
            c.m2 = m2;
            c.n_off = h;
            c.n_on = h;
            c.dt = off.dt;
            c.Q = Mat::Zero(2 * h, 2 * h);
            c.Q.topLeftCorner(h, h) = kron(id2, off.D0);
            c.Q.topRightCorner(h, h) = kron(p_on, Mat(exit_off.asDiagonal()));
            c.Q.bottomLeftCorner(h, h) = kron(Mat(exit_on.asDiagonal()), p_off);
            c.Q.bottomRightCorner(h, h) = kron(on.D0, id1);
            break;
        }
        case CarrierKind::PointProcess: {
            require(mode.map_off.has_value(), ErrorCode::InvalidArgument, "point carrier needs MAP^off");
            const DiscreteMap& off = *mode.map_off;
            off.validate(1e-9);
            const int m1 = off.m();
            c.m1 = m1;
            c.m2 = 1;
            c.n_off = m1;
            c.n_on = m1;
            c.dt = off.dt;
            // On states mark the slot of an arrival; the phase keeps evolving.
            c.Q = Mat::Zero(2 * m1, 2 * m1);
            c.Q.topLeftCorner(m1, m1) = off.D0;
            c.Q.topRightCorner(m1, m1) = off.D1;
            c.Q.bottomLeftCorner(m1, m1) = off.D0;
            c.Q.bottomRightCorner(m1, m1) = off.D1;
            break;
        }
        case CarrierKind::AlwaysOn: {
            require(mode.dt > 0.0, ErrorCode::InvalidArgument, "always-on carrier needs dt > 0");
            c.m1 = 1;
            c.m2 = 1;
            c.n_off = 0;
            c.n_on = 1;
            c.dt = mode.dt;
            c.Q = Mat::Ones(1, 1);
            break;
        }
    }
    return c;
}

}  // namespace dmapar
