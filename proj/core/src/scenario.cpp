#include "alpnet/scenario.hpp"

#include "alpnet/errors.hpp"
#include "alpnet/feasibility.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace alpnet {

using nlohmann::json;

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::affine: return "affine";
        case ScenarioKind::mimo: return "mimo";
        case ScenarioKind::worst_case: return "worst-case";
    }
    return "?";
}

std::string to_string(PhaseKind k) {
    switch (k) {
        case PhaseKind::admission: return "admission";
        case PhaseKind::transceiver: return "transceiver";
        case PhaseKind::distress: return "distress";
    }
    return "?";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw InputError("scenario." + path + ": " + msg);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}

int integer(const json& j, const std::string& path, int lo) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > 1'000'000'000) fail(path, "out of range");
    return static_cast<int>(v);
}

// A list of K numbers, or a single number broadcast to K entries.
Eigen::VectorXd vector_or_scalar(const json& j, const std::string& path, std::size_t k) {
    const auto n = static_cast<Eigen::Index>(k);
    if (j.is_number()) return Eigen::VectorXd::Constant(n, number(j, path));
    if (!j.is_array()) fail(path, "expected a number or a list");
    if (j.size() != k) fail(path, "expected " + std::to_string(k) + " entries, got " + std::to_string(j.size()));
    Eigen::VectorXd v(n);
    for (std::size_t i = 0; i < k; ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Eigen::MatrixXd square_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty list of rows");
    const std::size_t k = j.size();
    Eigen::MatrixXd m(k, k);
    for (std::size_t r = 0; r < k; ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != k) fail(rp, "expected a row of " + std::to_string(k) + " numbers");
        for (std::size_t c = 0; c < k; ++c) m(r, c) = number(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

AffineParams affine_params(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    if (!j.contains("gain_matrix")) fail(path + "gain_matrix", "missing");
    AffineParams a;
    a.gain = square_matrix(j["gain_matrix"], path + "gain_matrix");
    if (!j.contains("noise")) fail(path + "noise", "missing");
    a.noise = vector_or_scalar(j["noise"], path + "noise", static_cast<std::size_t>(a.gain.rows()));
    try {
        AffineModel check(a.gain, a.noise);
    } catch (const InputError& e) {
        fail(path.empty() ? "gain_matrix" : path.substr(0, path.size() - 1), e.what());
    }
    return a;
}

Eigen::MatrixXcd complex_matrix(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(rows)) fail(path, "expected " + std::to_string(rows) + " rows");
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!row.is_array() || row.size() != static_cast<std::size_t>(cols))
            fail(rp, "expected " + std::to_string(cols) + " entries");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            const std::string ep = rp + "[" + std::to_string(c) + "]";
            if (e.is_number()) {
                m(r, c) = {number(e, ep), 0.0};
            } else if (e.is_array() && e.size() == 2) {
                m(r, c) = {number(e[0], ep + "[0]"), number(e[1], ep + "[1]")};
            } else {
                fail(ep, "expected [re, im]");
            }
        }
    }
    return m;
}

std::vector<std::size_t> user_list(const json& j, const std::string& path, std::size_t k) {
    if (!j.is_array()) fail(path, "expected a list of user ids");
    std::vector<std::size_t> out;
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const int id = integer(j[i], path + "[" + std::to_string(i) + "]", 0);
        if (static_cast<std::size_t>(id) >= k) fail(path, "user id " + std::to_string(id) + " out of range");
        if (!seen.insert(static_cast<std::size_t>(id)).second) fail(path, "duplicate user id " + std::to_string(id));
        out.push_back(static_cast<std::size_t>(id));
    }
    return out;
}

PhaseSpec phase(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("phase")) fail(path, "expected an object with a 'phase' field");
    PhaseSpec p;
    const auto name = j["phase"].is_string() ? j["phase"].get<std::string>() : "";
    if (name == "admission") p.kind = PhaseKind::admission;
    else if (name == "transceiver") p.kind = PhaseKind::transceiver;
    else if (name == "distress") p.kind = PhaseKind::distress;
    else fail(path + ".phase", "expected admission, transceiver or distress");
    if (j.contains("budget")) p.budget = integer(j["budget"], path + ".budget", 1);
    if (j.contains("rounds")) p.rounds = integer(j["rounds"], path + ".rounds", 0);
    if (j.contains("rule")) {
        if (!j["rule"].is_string()) fail(path + ".rule", "expected a string");
        p.rule = j["rule"].get<std::string>();
        if (p.rule != "eq20" && p.rule != "eq21" && p.rule != "eq22") fail(path + ".rule", "expected eq20, eq21 or eq22");
    }
    return p;
}

void schedule_items(const json& j, const std::string& path, std::vector<PhaseSpec>& out) {
    if (!j.is_array()) fail(path, "expected a list");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string ip = path + "[" + std::to_string(i) + "]";
        if (j[i].is_object() && j[i].contains("repeat")) {
            const int n = integer(j[i]["repeat"], ip + ".repeat", 1);
            if (!j[i].contains("phases")) fail(ip + ".phases", "missing");
            for (int r = 0; r < n; ++r) schedule_items(j[i]["phases"], ip + ".phases", out);
        } else {
            out.push_back(phase(j[i], ip));
        }
    }
}

struct Fnv {
    std::uint64_t h = 1469598103934665603ULL;
    void add(const void* data, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    }
    void add(const std::string& s) { add(s.data(), s.size()); }
    void add(double v) { add(&v, sizeof v); }
};

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Pre-admitted users at delta*gamma on their own sub-network.
void warm_start(Scenario& s, std::mt19937_64& rng) {
    const auto& ws = *s.warm_start;
    const auto& pre = ws.preadmitted;
    const auto m = static_cast<Eigen::Index>(pre.size());
    Eigen::VectorXd g(m);
    for (Eigen::Index i = 0; i < m; ++i) g[i] = s.targets.gamma[static_cast<Eigen::Index>(pre[i])];
    const SirTargets sub_targets(g, s.targets.delta);

    ModelPtr sub;
    if (s.kind == ScenarioKind::mimo) {
        const MimoScenario sub_scn = s.mimo->subset(pre);
        BeamformerSet b = svd_init(sub_scn);
        PowerVector p = PowerVector::Ones(m);
        for (int r = 0; r < ws.rounds; ++r) {
            RoundResult rr = transceiver_round(sub_scn, b, p);
            b = std::move(rr.beams);
            p = std::move(rr.p_primal);
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            s.initial_beams->t[pre[i]] = b.t[i];
            s.initial_beams->u[pre[i]] = b.u[i];
        }
        sub = std::make_shared<AffineModel>(effective_gains(sub_scn, b));
    } else {
        auto restrict_affine = [&](const AffineParams& a) {
            Eigen::MatrixXd v(m, m);
            Eigen::VectorXd z(m);
            for (Eigen::Index i = 0; i < m; ++i) {
                z[i] = a.noise[static_cast<Eigen::Index>(pre[i])];
                for (Eigen::Index j = 0; j < m; ++j)
                    v(i, j) = a.gain(static_cast<Eigen::Index>(pre[i]), static_cast<Eigen::Index>(pre[j]));
            }
            return std::make_shared<AffineModel>(v, z);
        };
        if (s.kind == ScenarioKind::affine) {
            sub = restrict_affine(s.affine);
        } else {
            std::vector<ModelPtr> ms;
            for (const auto& a : s.members) ms.push_back(restrict_affine(a));
            sub = std::make_shared<WorstCaseModel>(ms);
        }
    }

    const auto margin = sub_targets.with_margin();
    if (decide_feasible(*sub, margin.gamma) != Verdict::feasible)
        fail("warm_start", "delta*gamma is not feasible on the pre-admitted sub-network");

    std::uniform_real_distribution<double> logu(std::log(1e-3), std::log(1e-1));
    s.initial_powers.resize(static_cast<Eigen::Index>(s.users));
    for (std::size_t k = 0; k < s.users; ++k) {
        const double draw = std::exp(logu(rng));
        s.initial_powers[static_cast<Eigen::Index>(k)] = ws.inactive_power ? *ws.inactive_power : draw;
    }

    // The pre-admitted users meet delta*gamma on the full network, with the
    // newcomers' powers held fixed.
    UserMask is_pre(s.users, false);
    for (auto k : pre) is_pre[k] = true;
    const ModelPtr full = build_model(s);
    const Eigen::VectorXd rest = select(s.initial_powers, is_pre, false);
    const FunctionModel pinned(pre.size(), [&](const Eigen::VectorXd& pa) {
        return select(full->evaluate(merge_partition(is_pre, pa, rest)), is_pre, true);
    });
    if (decide_feasible(pinned, margin.gamma) != Verdict::feasible)
        fail("warm_start", "delta*gamma is not feasible for the pre-admitted users");
    PowerVector p_sub;
    try {
        p_sub = yates_fixed_point(pinned, margin.gamma, PowerVector::Zero(m), {1e-13, 1000000});
    } catch (const BudgetError&) {
        fail("warm_start", "fixed point for the pre-admitted users did not converge");
    }
    for (Eigen::Index i = 0; i < m; ++i) s.initial_powers[static_cast<Eigen::Index>(pre[i])] = p_sub[i];
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, std::optional<std::uint64_t> seed_override) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("scenario: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("scenario: top level must be an object");

    Scenario s;
    s.config_json = j.dump();
    if (j.contains("name")) {
        if (!j["name"].is_string()) fail("name", "expected a string");
        s.name = j["name"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            fail("seed", "expected a nonnegative integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    if (seed_override) s.seed = *seed_override;

    const std::string kind = j.value("kind", std::string("affine"));
    if (kind == "affine") s.kind = ScenarioKind::affine;
    else if (kind == "mimo") s.kind = ScenarioKind::mimo;
    else if (kind == "worst-case") s.kind = ScenarioKind::worst_case;
    else fail("kind", "expected affine, mimo or worst-case");

    std::optional<std::size_t> users;
    if (j.contains("users")) users = static_cast<std::size_t>(integer(j["users"], "users", 1));

    switch (s.kind) {
        case ScenarioKind::affine:
            s.affine = affine_params(j, "");
            s.users = static_cast<std::size_t>(s.affine.gain.rows());
            break;
        case ScenarioKind::worst_case: {
            if (!j.contains("members") || !j["members"].is_array() || j["members"].empty())
                fail("members", "expected a nonempty list");
            for (std::size_t i = 0; i < j["members"].size(); ++i)
                s.members.push_back(affine_params(j["members"][i], "members[" + std::to_string(i) + "]."));
            s.users = static_cast<std::size_t>(s.members.front().gain.rows());
            for (std::size_t i = 1; i < s.members.size(); ++i)
                if (static_cast<std::size_t>(s.members[i].gain.rows()) != s.users)
                    fail("members[" + std::to_string(i) + "]", "user count differs from members[0]");
            break;
        }
        case ScenarioKind::mimo: {
            if (!j.contains("mimo") || !j["mimo"].is_object()) fail("mimo", "expected an object");
            const json& mj = j["mimo"];
            const auto n_r = mj.contains("n_r") ? integer(mj["n_r"], "mimo.n_r", 1) : 4;
            const auto n_t = mj.contains("n_t") ? integer(mj["n_t"], "mimo.n_t", 1) : 4;
            const double sigma2 = mj.contains("sigma2") ? number(mj["sigma2"], "mimo.sigma2") : 1.0;
            if (!(sigma2 > 0.0)) fail("mimo.sigma2", "must be > 0");
            if (mj.contains("channels")) {
                const json& cj = mj["channels"];
                if (!cj.is_array() || cj.empty()) fail("mimo.channels", "expected a K x K list of matrices");
                MimoScenario m;
                m.n_r = n_r;
                m.n_t = n_t;
                m.sigma2 = sigma2;
                const std::size_t k = cj.size();
                for (std::size_t a = 0; a < k; ++a) {
                    const std::string ap = "mimo.channels[" + std::to_string(a) + "]";
                    if (!cj[a].is_array() || cj[a].size() != k) fail(ap, "expected " + std::to_string(k) + " matrices");
                    std::vector<Eigen::MatrixXcd> row;
                    for (std::size_t b = 0; b < k; ++b)
                        row.push_back(complex_matrix(cj[a][b], ap + "[" + std::to_string(b) + "]", n_r, n_t));
                    m.h.push_back(std::move(row));
                }
                s.mimo = std::move(m);
            } else {
                if (!users) fail("users", "required when channels are generated");
                s.mimo = MimoScenario::random(*users, n_r, n_t, sigma2, s.seed);
            }
            s.users = s.mimo->users();
            s.initial_beams = svd_init(*s.mimo);
            break;
        }
    }
    if (users && *users != s.users)
        fail("users", "declares " + std::to_string(*users) + " users but the model has " + std::to_string(s.users));

    if (!j.contains("targets") || !j["targets"].is_object()) fail("targets", "expected an object");
    {
        const json& tj = j["targets"];
        if (!tj.contains("gamma")) fail("targets.gamma", "missing");
        if (!tj.contains("delta")) fail("targets.delta", "missing");
        const Eigen::VectorXd g = vector_or_scalar(tj["gamma"], "targets.gamma", s.users);
        const double d = number(tj["delta"], "targets.delta");
        if (!(d > 1.0)) fail("targets.delta", "must be > 1");
        try {
            s.targets = SirTargets(g, d);
        } catch (const InputError& e) {
            fail("targets", e.what());
        }
    }

    if (j.contains("power_caps")) {
        try {
            s.caps = PowerConstraints(vector_or_scalar(j["power_caps"], "power_caps", s.users));
        } catch (const InputError& e) {
            fail("power_caps", e.what());
        }
    }
    if (j.contains("initial_active")) {
        const auto ids = user_list(j["initial_active"], "initial_active", s.users);
        if (ids.empty()) fail("initial_active", "must not be empty");
        UserMask mask(s.users, false);
        for (auto id : ids) mask[id] = true;
        s.initial_active = std::move(mask);
    }

    if (j.contains("schedule")) {
        schedule_items(j["schedule"], "schedule", s.schedule);
        if (s.schedule.empty()) fail("schedule", "must not be empty");
    } else {
        s.schedule.push_back({});
    }
    for (std::size_t i = 0; i < s.schedule.size(); ++i) {
        if (s.schedule[i].kind == PhaseKind::transceiver && s.kind != ScenarioKind::mimo)
            fail("schedule[" + std::to_string(i) + "]", "transceiver phases need a mimo scenario");
        if (s.schedule[i].kind == PhaseKind::transceiver && s.caps)
            fail("schedule[" + std::to_string(i) + "]", "transceiver phases cannot be combined with power_caps");
        if (s.schedule[i].kind == PhaseKind::distress && !s.caps)
            fail("schedule[" + std::to_string(i) + "]", "distress phases need power_caps");
    }

    if (j.contains("admission")) {
        const json& aj = j["admission"];
        if (aj.contains("sir_tol")) s.admission_sir_tol = number(aj["sir_tol"], "admission.sir_tol");
        if (aj.contains("power_threshold_factor"))
            s.power_threshold_factor = number(aj["power_threshold_factor"], "admission.power_threshold_factor");
        if (!(s.admission_sir_tol > 0.0)) fail("admission.sir_tol", "must be > 0");
        if (!(s.power_threshold_factor > 1.0)) fail("admission.power_threshold_factor", "must be > 1");
    }

    // Power draws use their own stream so they do not shift the channels.
    std::mt19937_64 rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
    if (j.contains("warm_start")) {
        if (j.contains("initial_powers")) fail("warm_start", "cannot be combined with initial_powers");
        const json& wj = j["warm_start"];
        if (!wj.is_object()) fail("warm_start", "expected an object");
        WarmStart ws;
        if (!wj.contains("preadmitted")) fail("warm_start.preadmitted", "missing");
        ws.preadmitted = user_list(wj["preadmitted"], "warm_start.preadmitted", s.users);
        if (ws.preadmitted.empty()) fail("warm_start.preadmitted", "must not be empty");
        if (wj.contains("rounds")) ws.rounds = integer(wj["rounds"], "warm_start.rounds", 0);
        if (wj.contains("inactive_power")) {
            ws.inactive_power = number(wj["inactive_power"], "warm_start.inactive_power");
            if (!(*ws.inactive_power > 0.0)) fail("warm_start.inactive_power", "must be > 0");
        }
        s.warm_start = std::move(ws);
        warm_start(s, rng);
    } else if (j.contains("initial_powers")) {
        s.initial_powers = vector_or_scalar(j["initial_powers"], "initial_powers", s.users);
        if ((s.initial_powers.array() < 0.0).any()) fail("initial_powers", "must be nonnegative");
    } else {
        std::uniform_real_distribution<double> logu(std::log(1e-3), std::log(1e-1));
        s.initial_powers.resize(static_cast<Eigen::Index>(s.users));
        for (Eigen::Index k = 0; k < s.initial_powers.size(); ++k) s.initial_powers[k] = std::exp(logu(rng));
    }
    if (s.caps && (s.initial_powers.array() > s.caps->p_hat.array()).any())
        fail("initial_powers", "exceed power_caps");

    Fnv h;
    h.add(s.config_json);
    h.add(&s.seed, sizeof s.seed);
    for (Eigen::Index k = 0; k < s.initial_powers.size(); ++k) h.add(s.initial_powers[k]);
    if (s.mimo)
        for (const auto& row : s.mimo->h)
            for (const auto& m : row)
                for (Eigen::Index i = 0; i < m.size(); ++i) {
                    h.add(m(i).real());
                    h.add(m(i).imag());
                }
    s.hash = hex(h.h);
    return s;
}

Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    if (!seed_override) {
        if (const char* env = std::getenv("ALPNET_SEED"); env && *env) {
            char* end = nullptr;
            const auto v = std::strtoull(env, &end, 10);
            if (*end != '\0') throw InputError("ALPNET_SEED is not a nonnegative integer");
            seed_override = v;
        }
    }
    return parse_scenario(ss.str(), seed_override);
}

ModelPtr build_model(const Scenario& scn, const BeamformerSet* beams) {
    switch (scn.kind) {
        case ScenarioKind::affine:
            return std::make_shared<AffineModel>(scn.affine.gain, scn.affine.noise);
        case ScenarioKind::worst_case: {
            std::vector<ModelPtr> ms;
            for (const auto& a : scn.members) ms.push_back(std::make_shared<AffineModel>(a.gain, a.noise));
            return std::make_shared<WorstCaseModel>(std::move(ms));
        }
        case ScenarioKind::mimo:
            return std::make_shared<AffineModel>(effective_gains(*scn.mimo, beams ? *beams : *scn.initial_beams));
    }
    throw InputError("unknown scenario kind");
}

}  // namespace alpnet
