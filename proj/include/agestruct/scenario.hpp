#pragma once
// Scenario configuration: named rate families + grid + initial data, with a
// versioned JSON schema, canonical serialization, and an FNV-1a content hash
// stamped into output metadata so every CSV can be traced to its exact inputs.
//
// Canonical form uses insertion-ordered keys and shortest-round-trip number
// formatting, so save(load(s)) == s byte-for-byte for canonical files.

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "grid.hpp"
#include "rates.hpp"

namespace agestruct {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kSchemaTag = "agestruct-scenario/1";

struct InitialProfile {
    enum class Kind { zero, uniform_total, piecewise_uniform };
    Kind kind = Kind::zero;
    double total = 0.0;                                    // uniform_total
    double juvenile = 0.0, reproductive = 0.0, senescent = 0.0;  // piecewise masses

    std::vector<double> build(const AgeGrid& g) const {
        std::vector<double> p(g.n, 0.0);
        switch (kind) {
            case Kind::zero: break;
            case Kind::uniform_total:
                for (auto& x : p) x = total / g.a1;
                break;
            case Kind::piecewise_uniform:
                for (std::size_t j = 0; j < g.n; ++j) {
                    double a = g.center(j);
                    if (a < g.a_min)
                        p[j] = juvenile / g.a_min;
                    else if (a <= g.a_max)
                        p[j] = reproductive / (g.a_max - g.a_min);
                    else
                        p[j] = senescent / (g.a1 - g.a_max);
                }
                break;
        }
        return p;
    }
};

struct Horizon {
    double t_end = 400.0;
    double da = 0.1;
    double snapshot_every = 0.0;  // 0 = no snapshots
};

struct Ceilings {
    double q0 = 0.0;  // documented upper bounds on the weighted sizes,
    double q1 = 0.0;  // used to build envelope rates for comparison runs
};

struct Scenario {
    std::string name;
    double a1 = 80.0, a_min = 15.0, a_max = 35.0;
    Rates rates;
    InitialProfile initial;
    Horizon horizon;
    Ceilings ceilings;

    AgeGrid grid(double da_override = 0.0) const {
        return AgeGrid(a1, da_override > 0.0 ? da_override : horizon.da, a_min, a_max);
    }
};

// Rebuild a scenario with a different reproductive window.  Age-valued profile
// parameters that sit exactly on an old window edge follow that edge: the
// built-in fertility ramp starts at a_min and is cut at a_max, so moving a_min
// shifts the onset of reproduction to the new maturation age rather than
// truncating a fixed schedule; likewise the juvenile-burden support [0, a_min]
// and the senior weight window starting at a_max.  Scale and rate parameters
// never move, and parameters off the old edges (for example a crowding curve
// centered strictly inside the window) stay put.
inline Scenario with_window(Scenario s, double a_min, double a_max) {
    const double old_min = s.a_min, old_max = s.a_max;
    auto remap = [&](double& v) {
        if (v == old_min)
            v = a_min;
        else if (v == old_max)
            v = a_max;
    };
    auto remap_ages = [&](AgeProfile& p) {
        using K = AgeProfile::Kind;
        switch (p.kind) {
            case K::ramp_exp:
                remap(p.p1);
                remap(p.p3);
                break;
            case K::quad_around:
            case K::ramp_down: remap(p.p1); break;
            case K::window:
                remap(p.p0);
                remap(p.p1);
                break;
            case K::zero:
            case K::constant:
            case K::const_plus_exp: break;  // no age-valued parameters
        }
    };
    s.a_min = a_min;
    s.a_max = a_max;
    remap_ages(s.rates.beta_age);
    remap_ages(s.rates.mu0.base);
    remap_ages(s.rates.mu0.slope);
    remap_ages(s.rates.mu1.base);
    remap_ages(s.rates.mu1.slope);
    remap_ages(s.rates.mu2);
    remap_ages(s.rates.omega0);
    remap_ages(s.rates.omega1);
    return s;
}

// ---------------------------------------------------------------------------
// JSON <-> structs
// ---------------------------------------------------------------------------

namespace detail {

inline ordered_json profile_to_json(const AgeProfile& p) {
    using K = AgeProfile::Kind;
    ordered_json j;
    switch (p.kind) {
        case K::zero: j["kind"] = "zero"; break;
        case K::constant:
            j["kind"] = "constant";
            j["value"] = p.p0;
            break;
        case K::const_plus_exp:
            j["kind"] = "const_plus_exp";
            j["base"] = p.p0;
            j["amplitude"] = p.p1;
            j["rate"] = p.p2;
            break;
        case K::ramp_exp:
            j["kind"] = "ramp_exp";
            j["scale"] = p.p0;
            j["shift"] = p.p1;
            j["decay"] = p.p2;
            j["cut"] = p.p3;
            break;
        case K::quad_around:
            j["kind"] = "quad_around";
            j["scale"] = p.p0;
            j["center"] = p.p1;
            break;
        case K::ramp_down:
            j["kind"] = "ramp_down";
            j["scale"] = p.p0;
            j["cut"] = p.p1;
            break;
        case K::window:
            j["kind"] = "window";
            j["lo"] = p.p0;
            j["hi"] = p.p1;
            break;
    }
    return j;
}

inline AgeProfile profile_from_json(const ordered_json& j, const std::string& where) {
    using K = AgeProfile::Kind;
    if (!j.is_object() || !j.contains("kind"))
        throw config_error(where + ": expected an object with a 'kind'");
    AgeProfile p;
    const std::string kind = j.at("kind").get<std::string>();
    auto num = [&](const char* key) -> double {
        if (!j.contains(key) || !j.at(key).is_number())
            throw config_error(where + ": missing numeric field '" + key + "'");
        return j.at(key).get<double>();
    };
    if (kind == "zero") {
        p.kind = K::zero;
    } else if (kind == "constant") {
        p.kind = K::constant;
        p.p0 = num("value");
    } else if (kind == "const_plus_exp") {
        p.kind = K::const_plus_exp;
        p.p0 = num("base");
        p.p1 = num("amplitude");
        p.p2 = num("rate");
    } else if (kind == "ramp_exp") {
        p.kind = K::ramp_exp;
        p.p0 = num("scale");
        p.p1 = num("shift");
        p.p2 = num("decay");
        p.p3 = num("cut");
    } else if (kind == "quad_around") {
        p.kind = K::quad_around;
        p.p0 = num("scale");
        p.p1 = num("center");
    } else if (kind == "ramp_down") {
        p.kind = K::ramp_down;
        p.p0 = num("scale");
        p.p1 = num("cut");
    } else if (kind == "window") {
        p.kind = K::window;
        p.p0 = num("lo");
        p.p1 = num("hi");
    } else {
        throw config_error(where + ": unknown profile kind '" + kind + "'");
    }
    return p;
}

inline ordered_json zmod_to_json(const ZMod& m) {
    ordered_json j;
    switch (m.kind) {
        case ZMod::Kind::one: j["kind"] = "one"; break;
        case ZMod::Kind::reciprocal:
            j["kind"] = "reciprocal";
            j["c"] = m.p0;
            break;
        case ZMod::Kind::gauss_bump_reciprocal:
            j["kind"] = "gauss_bump_reciprocal";
            j["amplitude"] = m.p0;
            j["center"] = m.p1;
            j["width"] = m.p2;
            j["c"] = m.p3;
            break;
    }
    return j;
}

inline ZMod zmod_from_json(const ordered_json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind"))
        throw config_error(where + ": expected an object with a 'kind'");
    ZMod m;
    auto num = [&](const char* key) -> double {
        if (!j.contains(key) || !j.at(key).is_number())
            throw config_error(where + ": missing numeric field '" + key + "'");
        return j.at(key).get<double>();
    };
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "one") {
        m.kind = ZMod::Kind::one;
    } else if (kind == "reciprocal") {
        m.kind = ZMod::Kind::reciprocal;
        m.p0 = num("c");
    } else if (kind == "gauss_bump_reciprocal") {
        m.kind = ZMod::Kind::gauss_bump_reciprocal;
        m.p0 = num("amplitude");
        m.p1 = num("center");
        m.p2 = num("width");
        m.p3 = num("c");
    } else {
        throw config_error(where + ": unknown modulation kind '" + kind + "'");
    }
    return m;
}

inline ordered_json feedback_to_json(const Feedback& f) {
    ordered_json j;
    if (f.kind == Feedback::Kind::identity) {
        j["kind"] = "identity";
    } else {
        j["kind"] = "scale";
        j["factor"] = f.p0;
    }
    return j;
}

inline Feedback feedback_from_json(const ordered_json& j, const std::string& where) {
    Feedback f;
    if (!j.is_object() || !j.contains("kind"))
        throw config_error(where + ": expected an object with a 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") {
        f.kind = Feedback::Kind::identity;
    } else if (kind == "scale") {
        f.kind = Feedback::Kind::scale;
        if (!j.contains("factor") || !j.at("factor").is_number())
            throw config_error(where + ": missing numeric field 'factor'");
        f.p0 = j.at("factor").get<double>();
        if (f.p0 <= 0.0) throw config_error(where + ": factor must be positive");
    } else {
        throw config_error(where + ": unknown feedback kind '" + kind + "'");
    }
    return f;
}

}  // namespace detail

inline ordered_json scenario_to_json(const Scenario& s) {
    ordered_json j;
    j["schema"] = kSchemaTag;
    j["name"] = s.name;
    j["grid"] = {{"a1", s.a1}, {"a_min", s.a_min}, {"a_max", s.a_max}, {"da", s.horizon.da}};
    j["fertility"] = {{"age", detail::profile_to_json(s.rates.beta_age)},
                      {"modulation", detail::zmod_to_json(s.rates.beta_mod)}};
    j["mortality_adult"] = {{"base", detail::profile_to_json(s.rates.mu0.base)},
                            {"slope", detail::profile_to_json(s.rates.mu0.slope)}};
    j["mortality_juvenile"] = {{"slope", detail::profile_to_json(s.rates.mu1.slope)}};
    j["mortality_background"] = detail::profile_to_json(s.rates.mu2);
    j["feedback"] = {{"eta0", detail::feedback_to_json(s.rates.eta0)},
                     {"eta1", detail::feedback_to_json(s.rates.eta1)},
                     {"eta2", detail::feedback_to_json(s.rates.eta2)}};
    j["weights"] = {{"omega0", detail::profile_to_json(s.rates.omega0)},
                    {"omega1", detail::profile_to_json(s.rates.omega1)}};
    {
        ordered_json ji;
        switch (s.initial.kind) {
            case InitialProfile::Kind::zero: ji["kind"] = "zero"; break;
            case InitialProfile::Kind::uniform_total:
                ji["kind"] = "uniform_total";
                ji["total"] = s.initial.total;
                break;
            case InitialProfile::Kind::piecewise_uniform:
                ji["kind"] = "piecewise_uniform";
                ji["juvenile"] = s.initial.juvenile;
                ji["reproductive"] = s.initial.reproductive;
                ji["senescent"] = s.initial.senescent;
                break;
        }
        j["initial"] = ji;
    }
    j["horizon"] = {{"t_end", s.horizon.t_end}, {"snapshot_every", s.horizon.snapshot_every}};
    j["ceilings"] = {{"q0", s.ceilings.q0}, {"q1", s.ceilings.q1}};
    return j;
}

inline Scenario scenario_from_json(const ordered_json& j) {
    if (!j.is_object()) throw config_error("scenario: root must be an object");
    if (!j.contains("schema") || j.at("schema") != kSchemaTag)
        throw config_error("scenario: missing or unsupported 'schema' (want " +
                           std::string(kSchemaTag) + ")");
    Scenario s;
    try {
        s.name = j.at("name").get<std::string>();
        const auto& jg = j.at("grid");
        s.a1 = jg.at("a1").get<double>();
        s.a_min = jg.at("a_min").get<double>();
        s.a_max = jg.at("a_max").get<double>();
        s.horizon.da = jg.at("da").get<double>();
        const auto& jf = j.at("fertility");
        s.rates.beta_age = detail::profile_from_json(jf.at("age"), "fertility.age");
        s.rates.beta_mod = detail::zmod_from_json(jf.at("modulation"), "fertility.modulation");
        s.rates.mu0.base = detail::profile_from_json(j.at("mortality_adult").at("base"),
                                                     "mortality_adult.base");
        s.rates.mu0.slope = detail::profile_from_json(j.at("mortality_adult").at("slope"),
                                                      "mortality_adult.slope");
        s.rates.mu1.base = AgeProfile{};  // structurally zero: no burden without seniors
        s.rates.mu1.slope = detail::profile_from_json(j.at("mortality_juvenile").at("slope"),
                                                      "mortality_juvenile.slope");
        s.rates.mu2 =
            detail::profile_from_json(j.at("mortality_background"), "mortality_background");
        if (j.contains("feedback")) {
            s.rates.eta0 =
                detail::feedback_from_json(j.at("feedback").at("eta0"), "feedback.eta0");
            s.rates.eta1 =
                detail::feedback_from_json(j.at("feedback").at("eta1"), "feedback.eta1");
            s.rates.eta2 =
                detail::feedback_from_json(j.at("feedback").at("eta2"), "feedback.eta2");
        }
        if (j.contains("weights")) {
            s.rates.omega0 =
                detail::profile_from_json(j.at("weights").at("omega0"), "weights.omega0");
            s.rates.omega1 =
                detail::profile_from_json(j.at("weights").at("omega1"), "weights.omega1");
        } else {
            s.rates.omega0 = window_profile(0.0, s.a1);
            s.rates.omega1 = window_profile(s.a_max, s.a1);
        }
        {
            const auto& ji = j.at("initial");
            const std::string kind = ji.at("kind").get<std::string>();
            if (kind == "zero") {
                s.initial.kind = InitialProfile::Kind::zero;
            } else if (kind == "uniform_total") {
                s.initial.kind = InitialProfile::Kind::uniform_total;
                s.initial.total = ji.at("total").get<double>();
            } else if (kind == "piecewise_uniform") {
                s.initial.kind = InitialProfile::Kind::piecewise_uniform;
                s.initial.juvenile = ji.at("juvenile").get<double>();
                s.initial.reproductive = ji.at("reproductive").get<double>();
                s.initial.senescent = ji.at("senescent").get<double>();
            } else {
                throw config_error("initial: unknown kind '" + kind + "'");
            }
        }
        const auto& jh = j.at("horizon");
        s.horizon.t_end = jh.at("t_end").get<double>();
        s.horizon.snapshot_every = jh.at("snapshot_every").get<double>();
        if (j.contains("ceilings")) {
            s.ceilings.q0 = j.at("ceilings").at("q0").get<double>();
            s.ceilings.q1 = j.at("ceilings").at("q1").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("scenario: ") + e.what());
    }
    return s;
}

// Domain validation beyond structural parsing (throws domain_error).
inline void validate_scenario(const Scenario& s) {
    AgeGrid g = s.grid();  // validates grid numbers and window ordering
    if (s.horizon.t_end <= 0.0) throw domain_error("horizon: t_end must be positive");
    if (s.horizon.snapshot_every < 0.0)
        throw domain_error("horizon: snapshot_every must be nonnegative");
    // rates must be nonnegative over the age range at representative sizes
    const double zs[] = {0.0, 1.0, s.ceilings.q0 > 0 ? s.ceilings.q0 : 1e4};
    for (std::size_t j = 0; j < g.n; ++j) {
        double a = g.center(j);
        if (s.rates.mu2(a) < 0.0) throw domain_error("mortality_background is negative");
        for (double z : zs) {
            if (s.rates.beta(a, s.rates.eta2(z)) < 0.0) throw domain_error("fertility is negative");
            if (s.rates.mu0(a, s.rates.eta0(z)) < 0.0)
                throw domain_error("mortality_adult is negative");
            if (s.rates.mu1(a, s.rates.eta1(z)) < 0.0)
                throw domain_error("mortality_juvenile is negative");
        }
    }
}

// ---------------------------------------------------------------------------
// canonical text, hashing, file and preset resolution
// ---------------------------------------------------------------------------

inline std::string canonical_text(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline std::string scenario_hash(const Scenario& s) { return fnv1a_hex(canonical_text(s)); }

inline Scenario load_scenario_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("scenario: JSON parse failed: ") + e.what());
    }
    Scenario s = scenario_from_json(j);
    validate_scenario(s);
    return s;
}

inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("scenario: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario_text(ss.str());
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "table1-baseline",       "table1-oscillatory",       "example-4-1",
        "example-4-1-subcritical", "age-only-mortality",     "bounded-fertility",
        "multi-equilibrium-fixture"};
    return names;
}

// Resolve --config: an existing file path wins, otherwise a preset name is
// looked up under the scenario directories.
inline Scenario resolve_scenario(const std::string& spec,
                                 const std::vector<std::string>& preset_dirs) {
    if (std::ifstream probe(spec); probe.good()) return load_scenario_file(spec);
    for (const auto& dir : preset_dirs) {
        std::string candidate = dir + "/" + spec + ".json";
        if (std::ifstream probe(candidate); probe.good()) return load_scenario_file(candidate);
    }
    throw config_error("scenario: '" + spec + "' is neither a readable file nor a known preset");
}

}  // namespace agestruct
