#pragma once

#include "dmapar/linalg.hpp"
#include "dmapar/map.hpp"

#include <optional>
#include <string>

namespace dmapar {

enum class CarrierKind { DualMap, PointProcess, AlwaysOn };

const char* carrier_kind_name(CarrierKind k);
CarrierKind parse_carrier_kind(const std::string& s);

struct CarrierMode {
    CarrierKind kind = CarrierKind::AlwaysOn;
    std::optional<DiscreteMap> map_off;  // DualMap, PointProcess
    std::optional<DiscreteMap> map_on;   // DualMap
    double dt = 0.0;                     // AlwaysOn; otherwise taken from the MAPs

    static CarrierMode dual(DiscreteMap off, DiscreteMap on);
    static CarrierMode point(DiscreteMap off);
    static CarrierMode always_on(double dt);
};

// Carrier chain over off states [0, n_off) followed by on states.
struct CarrierChain {
    CarrierMode mode;
    int m1 = 0;
    int m2 = 0;
    int n_off = 0;
    int n_on = 0;
    Mat Q;
    double dt = 0.0;

    int size() const { return n_off + n_on; }
    bool is_on(int state) const { return state >= n_off; }
};

int embed_state(int o, int s_on, int s_off, int m1, int m2);

// Row-normalized copy of d1; throws NonNormalizable on a zero row.
Mat normalized_jumps(const Mat& d1, const char* which);

CarrierChain build_q(const CarrierMode& mode);

}  // namespace dmapar
