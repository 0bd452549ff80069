// alpnet: run, classify, maxsir and check subcommands over scenario files.
//
// Exit codes: 0 success, 2 validation/input error, 3 budget or undecided.

#include "alpnet/beamforming.hpp"
#include "alpnet/errors.hpp"
#include "alpnet/scenario.hpp"
#include "alpnet/schedule.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kBudget = 3;

// Runs `fn`, mapping library errors to exit codes.
template <class Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const alpnet::InputError& e) {
        std::cerr << "alpnet: " << e.what() << "\n";
        return kInvalid;
    } catch (const alpnet::PreconditionError& e) {
        std::cerr << "alpnet: " << e.what() << "\n";
        return kInvalid;
    } catch (const alpnet::IoError& e) {
        std::cerr << "alpnet: " << e.what() << "\n";
        return kInvalid;
    } catch (const alpnet::BudgetError& e) {
        std::cerr << "alpnet: " << e.what() << "\n";
        return kBudget;
    } catch (const alpnet::DegenerateBeamError& e) {
        std::cerr << "alpnet: " << e.what() << "\n";
        return kBudget;
    }
}

int cmd_run(const std::vector<std::string>& files, const std::string& out, std::optional<std::uint64_t> seed) {
    // One output directory per scenario when several are given.
    auto one = [&](const std::string& file, const std::string& dir) {
        return guarded([&] {
            const auto scn = alpnet::load_scenario(file, seed);
            const auto res = alpnet::run_schedule(scn);
            alpnet::write_outputs(res, dir);
            std::printf("%s: %zu phases, violations %ld, trace %s\n", file.c_str(), res.phases.size(),
                        res.violations, (std::filesystem::path(dir) / "trace.csv").string().c_str());
            return kOk;
        });
    };
    if (files.size() == 1) return one(files.front(), out);

    std::vector<std::future<int>> jobs;
    for (const auto& f : files) {
        const auto dir = (std::filesystem::path(out) / std::filesystem::path(f).stem()).string();
        jobs.push_back(std::async(std::launch::async, one, f, dir));
    }
    int worst = kOk;
    for (auto& j : jobs) worst = std::max(worst, j.get());
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Admission and power control with active link protection"};
    app.require_subcommand(1);

    std::vector<std::string> run_files;
    std::string run_out;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run a scenario's phase schedule and write trace.csv + summary.json");
    run->add_option("--scenario", run_files, "Scenario file(s)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_out, "Output directory")->required();
    run->add_option("--seed", seed, "Override the scenario seed");

    std::string cls_file;
    auto* cls = app.add_subcommand("classify", "Print feasibility indices and the admissibility regime");
    cls->add_option("--scenario", cls_file, "Scenario file")->required()->check(CLI::ExistingFile);
    cls->add_option("--seed", seed, "Override the scenario seed");

    std::string ms_file;
    std::string policy = "full";
    int rounds = 30;
    auto* ms = app.add_subcommand("maxsir", "Largest common SIR target of a mimo scenario");
    ms->add_option("--scenario", ms_file, "Scenario file")->required()->check(CLI::ExistingFile);
    ms->add_option("--policy", policy, "fixed-svd | receive-only | full")
        ->check(CLI::IsMember({"fixed-svd", "receive-only", "full"}));
    ms->add_option("--rounds", rounds, "Alternating rounds per probe (full)")->check(CLI::PositiveNumber);
    ms->add_option("--seed", seed, "Override the scenario seed");

    std::string chk_file;
    auto* chk = app.add_subcommand("check", "Axiom, condition and protection audits");
    chk->add_option("--scenario", chk_file, "Scenario file")->required()->check(CLI::ExistingFile);
    chk->add_option("--seed", seed, "Override the scenario seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInvalid;
    }

    if (*run) return cmd_run(run_files, run_out, seed);
    if (*cls) {
        return guarded([&] {
            bool undecided = false;
            std::cout << alpnet::classify_json(alpnet::load_scenario(cls_file, seed), &undecided) << "\n";
            return undecided ? kBudget : kOk;
        });
    }
    if (*ms) {
        return guarded([&] {
            const auto scn = alpnet::load_scenario(ms_file, seed);
            if (!scn.mimo) throw alpnet::InputError("maxsir needs a mimo scenario");
            alpnet::MaxSirOptions opts;
            opts.rounds = rounds;
            const double v = alpnet::max_common_sir(*scn.mimo, alpnet::parse_policy(policy), opts);
            std::printf("{\"scenario\": \"%s\", \"seed\": %llu, \"policy\": \"%s\", \"max_common_sir\": %.17g}\n",
                        scn.name.c_str(), static_cast<unsigned long long>(scn.seed), policy.c_str(), v);
            return kOk;
        });
    }
    if (*chk) {
        return guarded([&] {
            bool ok = false;
            std::cout << alpnet::check_json(alpnet::load_scenario(chk_file, seed), &ok) << "\n";
            return ok ? kOk : kInvalid;
        });
    }
    return kInvalid;
}
