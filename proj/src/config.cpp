#include "irsotfs/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace irsotfs {

using nlohmann::json;

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::SumRate: return "sum_rate";
        case Scenario::Ber: return "ber";
        case Scenario::Convergence: return "convergence";
        case Scenario::IrsSweep: return "irs_sweep";
        case Scenario::DistanceSweep: return "distance_sweep";
        case Scenario::Mse: return "mse";
    }
    throw std::logic_error("unknown scenario");
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "sum_rate") return Scenario::SumRate;
    if (s == "ber") return Scenario::Ber;
    if (s == "convergence") return Scenario::Convergence;
    if (s == "irs_sweep") return Scenario::IrsSweep;
    if (s == "distance_sweep") return Scenario::DistanceSweep;
    if (s == "mse") return Scenario::Mse;
    throw std::invalid_argument("unknown scenario: " + s);
}

double Geometry::link_gain(double distance_m, double gain_db) const {
    const double ref = std::pow(10.0, gain_db / 10.0);
    if (!use_distance_law) return ref;
    const double d = std::max(distance_m, ref_distance_m);
    return ref * std::pow(d / ref_distance_m, -pathloss_exp);
}

double Geometry::direct_amplitude() const {
    return std::sqrt(link_gain((bs - ue).norm(), direct_gain_db));
}

double Geometry::bs_irs_amplitude() const {
    return std::sqrt(link_gain((bs - irs).norm(), bs_irs_gain_db));
}

double Geometry::irs_ue_amplitude() const {
    return std::sqrt(link_gain((irs - ue).norm(), irs_ue_gain_db));
}

void ExperimentConfig::validate() const {
    dims.validate();
    profile.validate();
    detector.validate();
    if (n_t < 1 || n_r < 1) throw std::invalid_argument("config: antenna counts >= 1");
    if (k_irs < 0) throw std::invalid_argument("config: K >= 0");
    if (snr_db.empty()) throw std::invalid_argument("config: SNR grid is empty");
    if (trials < 1) throw std::invalid_argument("config: trials >= 1");
    if (modulation_q < 1) throw std::invalid_argument("config: modulation_q >= 1");
    if (cases.empty()) throw std::invalid_argument("config: no cases selected");
    const bool needs_cases = scenario == Scenario::SumRate || scenario == Scenario::Ber ||
                             scenario == Scenario::Convergence ||
                             scenario == Scenario::DistanceSweep ||
                             scenario == Scenario::IrsSweep;
    if (needs_cases) {
        const int max_case = scenario == Scenario::SumRate ? 7 : 6;
        for (int c : cases) {
            if (c < 1 || c > max_case)
                throw std::invalid_argument("config: case selector out of range");
            if (scenario == Scenario::SumRate && c == 3 && k_irs == 0)
                throw std::invalid_argument(
                    "config: coherent phases (case 3) need an IRS");
        }
    }
    if (scenario == Scenario::Mse && mse_variants.empty())
        throw std::invalid_argument("config: mse scenario needs mse_variants");
    if (scenario == Scenario::DistanceSweep && distances_m.empty())
        throw std::invalid_argument("config: distance sweep needs distances_m");
}

namespace {

void read_dims(const json& j, GridDims& d) {
    d.M = j.value("M", d.M);
    d.N = j.value("N", d.N);
    d.M_cp = j.value("M_CP", d.M_cp);
}

json dims_to_json(const GridDims& d) {
    return json{{"M", d.M}, {"N", d.N}, {"M_CP", d.M_cp}};
}

void read_profile(const json& j, ChannelProfile& p) {
    if (j.contains("model")) {
        const std::string m = j["model"];
        if (m == "BPM") p.model = FadingModel::Bpm;
        else if (m == "EVA") p.model = FadingModel::Eva;
        else throw std::invalid_argument("config: unknown channel model " + m);
    }
    p.num_paths = j.value("num_paths", p.num_paths);
    p.max_tap = j.value("max_tap", p.max_tap);
    p.delta_f_hz = j.value("delta_f_hz", p.delta_f_hz);
    p.carrier_hz = j.value("carrier_hz", p.carrier_hz);
    p.ue_speed_kmh = j.value("ue_speed_kmh", p.ue_speed_kmh);
    p.fractional_doppler = j.value("fractional_doppler", p.fractional_doppler);
    if (j.contains("delay_ns")) p.delay_ns = j["delay_ns"].get<std::vector<double>>();
    if (j.contains("pdp_db")) p.pdp_db = j["pdp_db"].get<std::vector<double>>();
}

json profile_to_json(const ChannelProfile& p) {
    return json{{"model", p.model == FadingModel::Bpm ? "BPM" : "EVA"},
                {"num_paths", p.num_paths},
                {"max_tap", p.max_tap},
                {"delta_f_hz", p.delta_f_hz},
                {"carrier_hz", p.carrier_hz},
                {"ue_speed_kmh", p.ue_speed_kmh},
                {"fractional_doppler", p.fractional_doppler},
                {"delay_ns", p.delay_ns},
                {"pdp_db", p.pdp_db}};
}

Eigen::Vector3d read_vec3(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("config: coordinates must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void read_geometry(const json& j, Geometry& g) {
    if (j.contains("bs")) g.bs = read_vec3(j["bs"]);
    if (j.contains("irs")) g.irs = read_vec3(j["irs"]);
    if (j.contains("ue")) g.ue = read_vec3(j["ue"]);
    g.pathloss_exp = j.value("pathloss_exp", g.pathloss_exp);
    g.ref_distance_m = j.value("ref_distance_m", g.ref_distance_m);
    g.direct_gain_db = j.value("direct_gain_db", g.direct_gain_db);
    g.bs_irs_gain_db = j.value("bs_irs_gain_db", g.bs_irs_gain_db);
    g.irs_ue_gain_db = j.value("irs_ue_gain_db", g.irs_ue_gain_db);
    g.use_distance_law = j.value("use_distance_law", g.use_distance_law);
}

json geometry_to_json(const Geometry& g) {
    return json{{"bs", {g.bs.x(), g.bs.y(), g.bs.z()}},
                {"irs", {g.irs.x(), g.irs.y(), g.irs.z()}},
                {"ue", {g.ue.x(), g.ue.y(), g.ue.z()}},
                {"pathloss_exp", g.pathloss_exp},
                {"ref_distance_m", g.ref_distance_m},
                {"direct_gain_db", g.direct_gain_db},
                {"bs_irs_gain_db", g.bs_irs_gain_db},
                {"irs_ue_gain_db", g.irs_ue_gain_db},
                {"use_distance_law", g.use_distance_law}};
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("scenario")) c.scenario = scenario_from_string(j["scenario"]);
    if (j.contains("dims")) read_dims(j["dims"], c.dims);
    c.n_t = j.value("N_t", c.n_t);
    c.n_r = j.value("N_r", c.n_r);
    c.k_irs = j.value("K", c.k_irs);
    if (j.contains("profile")) read_profile(j["profile"], c.profile);
    if (j.contains("cases")) c.cases = j["cases"].get<std::vector<int>>();
    if (j.contains("snr_db")) c.snr_db = j["snr_db"].get<std::vector<double>>();
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    if (j.contains("geometry")) read_geometry(j["geometry"], c.geometry);
    if (j.contains("detector")) {
        const json& d = j["detector"];
        c.detector.rho = d.value("rho", c.detector.rho);
        c.detector.alpha = d.value("alpha", c.detector.alpha);
        c.detector.max_iter = d.value("max_iter", c.detector.max_iter);
        c.detector.tol = d.value("tol", c.detector.tol);
    }
    if (j.contains("als")) {
        const json& a = j["als"];
        c.als.blocks = a.value("blocks", c.als.blocks);
        c.als.slots = a.value("slots", c.als.slots);
        c.als.max_sweeps = a.value("max_sweeps", c.als.max_sweeps);
        c.als.tol = a.value("tol", c.als.tol);
        c.als.slot_drift = a.value("slot_drift", c.als.slot_drift);
    }
    if (j.contains("beamform")) {
        const json& b = j["beamform"];
        c.beamform.max_iter = b.value("max_iter", c.beamform.max_iter);
        c.beamform.tol = b.value("tol", c.beamform.tol);
        c.beamform.random_init = b.value("random_init", c.beamform.random_init);
        c.beamform.enabled = b.value("enabled", c.beamform.enabled);
    }
    c.modulation_q = j.value("modulation_q", c.modulation_q);
    c.frame_budget = j.value("frame_budget", c.frame_budget);
    c.err_target = j.value("err_target", c.err_target);
    c.ber_beamformed = j.value("ber_beamformed", c.ber_beamformed);
    if (j.contains("k_list")) c.k_list = j["k_list"].get<std::vector<int>>();
    if (j.contains("distances_m"))
        c.distances_m = j["distances_m"].get<std::vector<double>>();
    c.convergence_max_iter = j.value("convergence_max_iter", c.convergence_max_iter);
    if (j.contains("mse_variants")) {
        c.mse_variants.clear();
        for (const auto& v : j["mse_variants"]) {
            MseVariant mv;
            mv.label = v.value("label", std::string("variant"));
            const std::string m = v.value("model", std::string("BPM"));
            mv.model = m == "EVA" ? FadingModel::Eva : FadingModel::Bpm;
            mv.n_t = v.value("N_t", 1);
            mv.n_r = v.value("N_r", 1);
            mv.fractional_doppler = v.value("fractional_doppler", false);
            mv.ofdm_reference = v.value("ofdm_reference", false);
            c.mse_variants.push_back(mv);
        }
    }
    c.output = j.value("output", c.output);
    return c;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = to_string(c.scenario);
    j["dims"] = dims_to_json(c.dims);
    j["N_t"] = c.n_t;
    j["N_r"] = c.n_r;
    j["K"] = c.k_irs;
    j["profile"] = profile_to_json(c.profile);
    j["cases"] = c.cases;
    j["snr_db"] = c.snr_db;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["geometry"] = geometry_to_json(c.geometry);
    j["detector"] = json{{"rho", c.detector.rho},
                         {"alpha", c.detector.alpha},
                         {"max_iter", c.detector.max_iter},
                         {"tol", c.detector.tol}};
    j["als"] = json{{"blocks", c.als.blocks},
                    {"slots", c.als.slots},
                    {"max_sweeps", c.als.max_sweeps},
                    {"tol", c.als.tol},
                    {"slot_drift", c.als.slot_drift}};
    j["beamform"] = json{{"max_iter", c.beamform.max_iter},
                         {"tol", c.beamform.tol},
                         {"random_init", c.beamform.random_init},
                         {"enabled", c.beamform.enabled}};
    j["modulation_q"] = c.modulation_q;
    j["frame_budget"] = c.frame_budget;
    j["err_target"] = c.err_target;
    j["ber_beamformed"] = c.ber_beamformed;
    j["k_list"] = c.k_list;
    j["distances_m"] = c.distances_m;
    j["convergence_max_iter"] = c.convergence_max_iter;
    json variants = json::array();
    for (const auto& v : c.mse_variants)
        variants.push_back(json{{"label", v.label},
                                {"model", v.model == FadingModel::Bpm ? "BPM" : "EVA"},
                                {"N_t", v.n_t},
                                {"N_r", v.n_r},
                                {"fractional_doppler", v.fractional_doppler},
                                {"ofdm_reference", v.ofdm_reference}});
    j["mse_variants"] = variants;
    j["output"] = c.output;
    return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    return from_json(j);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
    return to_json(*this).dump(2);
}

std::uint64_t ExperimentConfig::hash() const {
    const std::string dump = to_json(*this).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void ExperimentConfig::apply_override(const std::string& key, const std::string& value) {
    json j = to_json(*this);
    json* node = &j;
    std::string rest = key;
    while (true) {
        const auto dot = rest.find('.');
        const std::string head = rest.substr(0, dot);
        if (!node->contains(head))
            throw std::invalid_argument("config override: unknown key " + key);
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::parse_error&) {
                parsed = value;  // plain strings may come unquoted
            }
            (*node)[head] = parsed;
            break;
        }
        node = &(*node)[head];
        rest = rest.substr(dot + 1);
    }
    *this = from_json(j);
}

}  // namespace irsotfs
