#include "dmapar/io.hpp"

#include "dmapar/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace dmapar {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Mat mat_from_json(const json& j, const char* what) {
    if (!j.is_array()) fail(ErrorCode::Parse, std::string(what) + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Mat(0, 0);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& r = j[static_cast<std::size_t>(i)];
        if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols)
            fail(ErrorCode::Parse, std::string(what) + ": ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

Vec vec_from_json(const json& j, const char* what) {
    if (!j.is_array()) fail(ErrorCode::Parse, std::string(what) + ": expected an array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

json dmap_to_json(const DiscreteMap& m) { return {{"D0", mat_to_json(m.D0)}, {"D1", mat_to_json(m.D1)}, {"dt", m.dt}}; }

DiscreteMap dmap_from_json(const json& j) {
    DiscreteMap m;
    m.D0 = mat_from_json(j.at("D0"), "D0");
    m.D1 = mat_from_json(j.at("D1"), "D1");
    m.dt = j.at("dt").get<double>();
    m.validate(1e-9);
    return m;
}

template <class F>
auto parse_guard(F f) {
    try {
        return f();
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace

std::string model_to_json(const DMaparHmm& model, const std::string& report_json) {
    const auto& mode = model.carrier.mode;
    json carrier = {{"kind", carrier_kind_name(mode.kind)}, {"dt", model.dt}};
    if (mode.map_off) carrier["map_off"] = dmap_to_json(*mode.map_off);
    if (mode.map_on) carrier["map_on"] = dmap_to_json(*mode.map_on);
    const ArHmm& a = model.arhmm;
    json ar = {{"N", a.N},
               {"p", a.p},
               {"residual", residual_name(a.residual)},
               {"P", mat_to_json(a.P)},
               {"mu", vec_to_json(a.mu)},
               {"phi", mat_to_json(a.phi)},
               {"sigma", vec_to_json(a.sigma)},
               {"pi0", vec_to_json(a.pi0)}};
    json doc = {{"schema", "dmapar-model"},
                {"version", kModelSchemaVersion},
                {"dt", model.dt},
                {"carrier", carrier},
                {"arhmm", ar}};
    if (!report_json.empty()) doc["report"] = parse_guard([&] { return json::parse(report_json); });
    return doc.dump(2) + "\n";
}

DMaparHmm model_from_json(const std::string& text) {
    return parse_guard([&] {
        json doc = json::parse(text);
        if (doc.value("schema", std::string()) != "dmapar-model")
            fail(ErrorCode::Parse, "not a model file (schema tag missing)");
        int version = doc.at("version").get<int>();
        if (version != kModelSchemaVersion)
            fail(ErrorCode::Parse, "unsupported model schema version " + std::to_string(version));
        const json& c = doc.at("carrier");
        CarrierKind kind = parse_carrier_kind(c.at("kind").get<std::string>());
        CarrierMode mode;
        switch (kind) {
            case CarrierKind::DualMap:
                mode = CarrierMode::dual(dmap_from_json(c.at("map_off")), dmap_from_json(c.at("map_on")));
                break;
            case CarrierKind::PointProcess: mode = CarrierMode::point(dmap_from_json(c.at("map_off"))); break;
            case CarrierKind::AlwaysOn: mode = CarrierMode::always_on(c.at("dt").get<double>()); break;
        }
        const json& j = doc.at("arhmm");
        ArHmm a = make_arhmm(j.at("N").get<int>(), j.at("p").get<int>(),
                             parse_residual(j.at("residual").get<std::string>()));
        a.P = mat_from_json(j.at("P"), "P");
        a.mu = vec_from_json(j.at("mu"), "mu");
        Mat phi = mat_from_json(j.at("phi"), "phi");
        if (a.p > 0) a.phi = phi;
        a.sigma = vec_from_json(j.at("sigma"), "sigma");
        a.pi0 = vec_from_json(j.at("pi0"), "pi0");
        a.validate(1e-9);
        return build_t(build_q(mode), a);
    });
}

void save_model(const std::string& path, const DMaparHmm& model, const std::string& report_json) {
    write_file_atomic(path, model_to_json(model, report_json));
}

DMaparHmm load_model(const std::string& path) { return model_from_json(read_file(path)); }

TopologySpec topology_from_json(const std::string& text, const std::string& base_dir) {
    return parse_guard([&] {
        json doc = json::parse(text);
        if (doc.contains("version") && doc["version"].get<int>() != kTopologySchemaVersion)
            fail(ErrorCode::Parse, "unsupported topology schema version");
        TopologySpec t;
        for (const auto& s : doc.at("servers")) {
            ServerSpec sv;
            sv.id = s.at("id").get<std::string>();
            if (s.contains("rate_mbps"))
                sv.rate_bits = s["rate_mbps"].get<double>() * 1e6;
            else
                sv.rate_bits = s.at("rate_bps").get<double>();
            sv.queues = s.value("queues", 2);
            t.servers.push_back(sv);
        }
        for (const auto& f : doc.at("flows")) {
            FlowSpec fl;
            fl.id = f.at("id").get<std::string>();
            fl.path = f.at("path").get<std::vector<std::string>>();
            fl.priority = f.value("priority", 0);
            for (const char* kind : {"model", "trace"}) {
                if (!f.contains(kind)) continue;
                fs::path p = f[kind].get<std::string>();
                if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
                fl.source = p.lexically_normal().string();
                fl.source_kind = kind;
            }
            t.flows.push_back(fl);
        }
        t.validate();
        return t;
    });
}

std::string topology_to_json(const TopologySpec& topo) {
    json doc = {{"version", kTopologySchemaVersion}, {"servers", json::array()}, {"flows", json::array()}};
    for (const auto& s : topo.servers)
        doc["servers"].push_back({{"id", s.id}, {"rate_mbps", s.rate_bits / 1e6}, {"queues", s.queues}});
    for (const auto& f : topo.flows) {
        json j = {{"id", f.id}, {"path", f.path}, {"priority", f.priority}};
        if (!f.source_kind.empty()) j[f.source_kind] = f.source;
        doc["flows"].push_back(j);
    }
    return doc.dump(2) + "\n";
}

TopologySpec load_topology(const std::string& path) {
    return topology_from_json(read_file(path), fs::path(path).parent_path().string());
}

std::string envelope_csv(const std::vector<SigmaRhoPoint>& points) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "theta,sigma_bytes,rho_bytes_per_s,valid_flag,method_flags\n";
    for (const auto& p : points) {
        os << p.theta << ',' << p.sigma << ',' << p.rho << ',' << (p.valid ? 1 : 0) << ',';
        std::string f = p.flags;
        if (!p.error.empty()) f += (f.empty() ? "" : ";") + std::string("error:") + p.error;
        for (char& ch : f)
            if (ch == ',' || ch == '\n') ch = ' ';
        os << f << '\n';
    }
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) fail(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorCode::Io, "cannot move output into '" + path + "'");
    }
}

}  // namespace dmapar
