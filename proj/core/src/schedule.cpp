#include "alpnet/schedule.hpp"

#include "alpnet/constrained.hpp"
#include "alpnet/errors.hpp"
#include "alpnet/feasibility.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>

namespace alpnet {

using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) {
    auto a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json mask_json(const UserMask& m) {
    auto a = json::array();
    for (bool b : m) a.push_back(b);
    return a;
}

GateRule rule_of(const std::string& r) {
    if (r == "eq20") return GateRule::eq20;
    if (r == "eq21") return GateRule::eq21;
    return GateRule::eq22;
}

double max_rel_change(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return ((a - b).cwiseAbs().array() / b.cwiseAbs().array()).maxCoeff();
}

}  // namespace

long count_trace_violations(const std::vector<TraceRecord>& records) {
    std::map<std::size_t, long> first_active;
    long count = 0;
    for (const auto& r : records) {
        const auto it = first_active.find(r.user);
        if (it != first_active.end() && it->second < r.step && !r.active) ++count;
        if (r.active && it == first_active.end()) first_active[r.user] = r.step;
    }
    return count;
}

ScheduleResult run_schedule(const Scenario& scn) {
    ScheduleResult res;
    const SirTargets& targets = scn.targets;
    const auto k = scn.users;
    std::optional<BeamformerSet> beams = scn.initial_beams;

    AlpConfig cfg;
    cfg.targets = targets;
    cfg.p0 = scn.initial_powers;
    cfg.initial_active = scn.initial_active;
    ModelPtr model = build_model(scn, beams ? &*beams : nullptr);
    PowerVector p = initial_state(*model, cfg).powers;  // validates A_0

    const double threshold = scn.power_threshold_factor * std::max(scn.initial_powers.maxCoeff(), 1e-300);
    long step = 0;
    auto record = [&](const NetworkState& st, const std::string& label) {
        for (std::size_t u = 0; u < k; ++u) {
            const auto i = static_cast<Eigen::Index>(u);
            res.records.push_back({step, label, u, st.powers[i], st.sirs[i], static_cast<bool>(st.active[u]),
                                   !st.distress.empty() && st.distress[u], st.gate});
        }
        ++step;
    };

    std::map<PhaseKind, int> counters;
    for (const auto& spec : scn.schedule) {
        const char tag = spec.kind == PhaseKind::admission ? 'A' : spec.kind == PhaseKind::transceiver ? 'T' : 'D';
        PhaseReport rep;
        rep.kind = spec.kind;
        rep.label = std::string(1, tag) + "." + std::to_string(++counters[spec.kind]);
        rep.first_step = step;

        model = build_model(scn, beams ? &*beams : nullptr);
        try {
            const FeasibilityReport fr = classify(*model, targets, scn.caps);
            rep.regime = scn.caps ? regime_name(fr.regime_caps, true) : regime_name(fr.regime, false);
            rep.c_gamma = scn.caps ? fr.c_gamma_caps : fr.c_gamma;
        } catch (const std::exception& e) {
            rep.regime = "undecided";
            res.events.push_back(rep.label + ": classification failed: " + e.what());
        }

        NetworkState s = make_state(*model, targets, p, 0);
        switch (spec.kind) {
            case PhaseKind::admission: {
                record(s, rep.label);
                rep.end = "budget";
                for (int i = 0; i < spec.budget; ++i) {
                    NetworkState next = scn.caps ? constrained_alp_step(*model, cfg, *scn.caps, s) : alp_step(*model, cfg, s);
                    record(next, rep.label);
                    const double change = max_rel_change(next.sirs, s.sirs);
                    s = std::move(next);
                    if (change < scn.admission_sir_tol) {
                        rep.end = "sir-converged";
                        break;
                    }
                    if (s.powers.maxCoeff() > threshold) {
                        rep.end = "power-threshold";
                        if (s.all_active())
                            res.events.push_back(rep.label + ": diverged with all users active at step " +
                                                 std::to_string(step - 1));
                        break;
                    }
                }
                if (rep.end == "budget") res.events.push_back(rep.label + ": budget exhausted");
                break;
            }
            case PhaseKind::transceiver: {
                record(s, rep.label);
                rep.end = "rounds";
                for (int r = 0; r < spec.rounds; ++r) {
                    try {
                        RoundResult rr = transceiver_round(*scn.mimo, *beams, s.powers);
                        for (auto& e : rr.events) res.events.push_back(rep.label + ": " + e);
                        beams = std::move(rr.beams);
                        model = build_model(scn, &*beams);
                        s = make_state(*model, targets, rr.p_primal, 0);
                        record(s, rep.label);
                    } catch (const BudgetError& e) {
                        rep.end = "budget";
                        res.events.push_back(rep.label + ": " + e.what());
                        break;
                    }
                }
                break;
            }
            case PhaseKind::distress: {
                AlpConfig dc = cfg;
                dc.p0 = s.powers;
                dc.initial_active.reset();
                dc.max_iter = spec.budget;
                DistressConfig dconf;
                dconf.rule = rule_of(spec.rule);
                try {
                    const Trajectory t = run_distress(*model, dc, *scn.caps, dconf);
                    for (const auto& st : t.states) record(st, rep.label);
                    for (const auto& e : t.events) res.events.push_back(rep.label + ": " + e);
                    rep.end = to_string(t.termination);
                    s = t.final_state();
                } catch (const BudgetError& e) {
                    record(s, rep.label);
                    s = make_state(*model, targets, e.last_iterate(), 0);
                    record(s, rep.label);
                    rep.end = "budget";
                    res.events.push_back(rep.label + ": budget exhausted");
                } catch (const InputError& e) {
                    record(s, rep.label);
                    rep.end = "skipped";
                    res.events.push_back(rep.label + ": " + e.what());
                }
                break;
            }
        }
        p = s.powers;
        rep.last_step = step - 1;
        res.phases.push_back(std::move(rep));
    }

    res.admission_step.assign(k, -1);
    std::vector<int> active_at_step(k, 0);
    long current = -1;
    std::size_t active_count = 0;
    for (const auto& r : res.records) {
        if (r.step != current) {
            current = r.step;
            active_count = 0;
        }
        if (r.active) {
            ++active_count;
            if (res.admission_step[r.user] < 0) res.admission_step[r.user] = r.step;
        }
        if (active_count == k && !res.all_admitted_at) res.all_admitted_at = r.step;
    }
    res.violations = count_trace_violations(res.records);
    const NetworkState fin = make_state(*build_model(scn, beams ? &*beams : nullptr), targets, p, 0);
    res.final_powers = fin.powers;
    res.final_sirs = fin.sirs;
    res.final_active = fin.active;

    json j;
    j["scenario"] = scn.name;
    j["hash"] = scn.hash;
    j["seed"] = scn.seed;
    j["kind"] = to_string(scn.kind);
    j["users"] = k;
    auto phases = json::array();
    for (const auto& ph : res.phases)
        phases.push_back({{"label", ph.label},
                          {"kind", to_string(ph.kind)},
                          {"first_step", ph.first_step},
                          {"last_step", ph.last_step},
                          {"end", ph.end},
                          {"regime", ph.regime},
                          {"c_gamma", ph.c_gamma}});
    j["phases"] = phases;
    auto adm = json::array();
    for (long a : res.admission_step) adm.push_back(a < 0 ? json(nullptr) : json(a));
    j["admission_steps"] = adm;
    j["all_admitted_at"] = res.all_admitted_at ? json(*res.all_admitted_at) : json(nullptr);
    j["violations"] = res.violations;
    j["final"] = {{"powers", vec_json(res.final_powers)},
                  {"sirs", vec_json(res.final_sirs)},
                  {"active", mask_json(res.final_active)}};
    j["events"] = res.events;
    j["artifact_defaults"] = {{"admission_sir_tol", scn.admission_sir_tol},
                              {"power_threshold_factor", scn.power_threshold_factor},
                              {"power_threshold_reference", "max initial power"},
                              {"reversed_network_noise", "same sigma2 as the primal network"},
                              {"admission_time_bound", "empirical only"}};
    j["config"] = json::parse(scn.config_json);
    res.summary_json = j.dump(2);
    return res;
}

void write_outputs(const ScheduleResult& result, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    emit_trace(result.records, (std::filesystem::path(dir) / "trace.csv").string());
    write_file((std::filesystem::path(dir) / "summary.json").string(), result.summary_json + "\n");
}

std::string classify_json(const Scenario& scn, bool* undecided) {
    const ModelPtr model = build_model(scn);
    const FeasibilityReport r = classify(*model, scn.targets, scn.caps);
    if (undecided) *undecided = r.regime == Regime::undecided;
    json j = json::parse(to_json(r));
    j["scenario"] = scn.name;
    j["hash"] = scn.hash;
    j["seed"] = scn.seed;
    return j.dump(2);
}

std::string check_json(const Scenario& scn, bool* ok_out) {
    const ModelPtr model = build_model(scn);
    bool ok = true;
    json j;
    j["scenario"] = scn.name;

    const AxiomReport ax = check_axioms(*model);
    j["axioms"] = {{"A1", ax.positivity}, {"A2", ax.scalability}, {"A3", ax.monotonicity}};
    if (ax.counterexample)
        j["axioms"]["counterexample"] = {{"axiom", to_string(ax.counterexample->axiom)},
                                         {"user", ax.counterexample->user},
                                         {"p", vec_json(ax.counterexample->p)}};
    ok = ok && ax.all_pass();

    AlpConfig cfg;
    cfg.targets = scn.targets;
    cfg.p0 = scn.initial_powers;
    cfg.initial_active = scn.initial_active;
    cfg.max_iter = 20000;
    const NetworkState s0 = initial_state(*model, cfg);
    j["c4"] = s0.all_active() ? json(nullptr) : json(check_c4(*model, s0));

    if (scn.caps) {
        const bool p8 = check_prop8(*model, scn.targets, *scn.caps);
        j["prop8"] = p8;
        try {
            const Trajectory t = run_constrained(*model, cfg, *scn.caps);
            j["constrained_run"] = {{"steps", t.states.size() - 1}, {"drops", t.drops.size()},
                                    {"termination", to_string(t.termination)}};
            if (p8 && !t.drops.empty()) ok = false;
        } catch (const BudgetError&) {
            j["constrained_run"] = {{"termination", "budget"}};
        }
    } else {
        const Trajectory t = run_alp(*model, cfg);
        const AlpAudit a = audit_alp(t, scn.targets.delta);
        j["alp_run"] = {{"steps", a.steps},
                        {"termination", to_string(t.termination)},
                        {"lemma1_failures", a.lemma1},
                        {"nesting_failures", a.prop2},
                        {"active_ratio_failures", a.eq11},
                        {"inactive_sir_failures", a.prop3},
                        {"violations", count_alp_violations(t)}};
        if (!a.first_failure.empty()) j["alp_run"]["first_failure"] = a.first_failure;
        ok = ok && a.clean();
    }
    j["ok"] = ok;
    if (ok_out) *ok_out = ok;
    return j.dump(2);
}

}  // namespace alpnet
