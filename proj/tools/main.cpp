#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "asos/conformance.hpp"
#include "asos/explorer.hpp"
#include "asos/parser.hpp"
#include "asos/validate.hpp"
#include "json.hpp"

namespace {

int default_jobs() {
    const char* env = std::getenv("ACTIVITY_SOS_JOBS");
    if (!env) return 1;
    int v = std::atoi(env);
    return v > 0 ? v : 1;
}

asos::Model load_checked_model(const std::string& path) {
    asos::Model m = asos::load_model_file(path);
    asos::ValidationReport report = asos::validate(m);
    if (!report.ok()) throw std::runtime_error(path + ":\n" + report.to_string());
    return m;
}

// The execution-time extension needs a time for every action anywhere in
// the model; a missing entry would silently mean zero.
void check_timing_coverage(const asos::Model& m, const std::map<std::string, int>& timing) {
    for (const auto& act : m.activities)
        for (const auto& n : act.nodes) {
            if (n.kind != asos::NodeKind::Action) continue;
            if (!timing.count(n.id))
                throw std::runtime_error("timing table has no entry for action '" + n.id + "'");
        }
}

asos::KripkeStructure load_kripke(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    asos::KripkeStructure k;
    for (const auto& js : j.at("states")) {
        asos::KripkeState st;
        st.id = js.at("id").get<int>();
        if (js.contains("fingerprint")) st.fingerprint = js["fingerprint"].get<std::string>();
        if (js.contains("props"))
            for (const auto& p : js["props"]) st.props.push_back(p.get<std::string>());
        k.states.push_back(std::move(st));
    }
    for (const auto& je : j.at("transitions"))
        k.transitions.push_back({je.at("src").get<int>(), je.at("label").get<std::string>(),
                                 je.at("dst").get<int>()});
    k.initial = j.at("initial").get<int>();
    if (j.contains("truncated")) k.truncated = j["truncated"].get<bool>();
    return k;
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << content;
}

struct ExploreArgs {
    std::string model_path;
    std::string profile = "reference";
    std::string mode = "reduced";
    std::string format = "json";
    std::string out_path;
    std::string timing_path;
    int jobs = default_jobs();
    int max_states = 0;
    int max_micro_depth = 100000;
    bool collapse_tau_self_loops = false;
    bool dump_states = false;
};

int run_explore(const ExploreArgs& a) {
    asos::Model m = load_checked_model(a.model_path);
    std::map<std::string, int> timing;
    if (!a.timing_path.empty()) timing = asos::load_timing_file(a.timing_path);
    asos::SemanticsProfile profile = asos::parse_profile_spec(a.profile, timing);
    if (profile.exec_time) check_timing_coverage(m, profile.timing);

    asos::ExploreOptions opt;
    opt.mode = a.mode == "complete" ? asos::ExploreMode::Complete : asos::ExploreMode::Reduced;
    opt.jobs = a.jobs;
    opt.max_states = a.max_states;
    opt.max_micro_depth = a.max_micro_depth;
    opt.collapse_tau_self_loops = a.collapse_tau_self_loops;

    asos::KripkeStructure k = asos::explore(m, profile, opt);
    write_output(a.out_path, a.format == "dot" ? asos::to_dot(k) : asos::to_json(k));

    if (a.dump_states)
        for (size_t i = 0; i < k.states.size(); ++i)
            std::cerr << "== state " << k.states[i].id << " " << k.states[i].fingerprint << "\n"
                      << asos::canonical_serialize(k.exec_states[i]);
    if (k.truncated) std::cerr << "note: exploration truncated at " << k.states.size()
                               << " states\n";
    for (const auto& d : k.diagnostics) std::cerr << "note: " << d << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Executable semantics and state-space tools for activity models"};
    app.require_subcommand(1);

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Parse a model and report rule violations");
    std::string validate_path;
    validate_cmd->add_option("model", validate_path, "model file")->required();

    // explore
    ExploreArgs ex;
    auto* explore_cmd = app.add_subcommand("explore", "Compute the reachable state graph");
    explore_cmd->add_option("model", ex.model_path, "model file")->required();
    explore_cmd->add_option("--profile", ex.profile,
                            "semantics profile: reference, exec-time, single-core, var1, var2 "
                            "(comma-separated to combine)");
    explore_cmd->add_option("--mode", ex.mode, "reduced or complete")
        ->check(CLI::IsMember({"reduced", "complete"}));
    explore_cmd->add_option("--format", ex.format, "json or dot")
        ->check(CLI::IsMember({"json", "dot"}));
    explore_cmd->add_option("--out", ex.out_path, "output file (default stdout)");
    explore_cmd->add_option("--timing", ex.timing_path,
                            "JSON table of per-action execution times");
    explore_cmd->add_option("--jobs", ex.jobs,
                            "worker threads (default from ACTIVITY_SOS_JOBS)");
    explore_cmd->add_option("--max-states", ex.max_states, "state budget, 0 = unlimited");
    explore_cmd->add_option("--max-micro-depth", ex.max_micro_depth,
                            "small-step states per closure");
    explore_cmd->add_flag("--collapse-tau-self-loops", ex.collapse_tau_self_loops,
                          "drop tau transitions that do not change the state");
    explore_cmd->add_flag("--dump-states", ex.dump_states,
                          "print each state's canonical form to stderr");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run one random execution");
    std::string sim_path, sim_profile = "reference", sim_timing;
    std::uint64_t sim_seed = 0;
    int sim_max_steps = 200;
    sim_cmd->add_option("model", sim_path, "model file")->required();
    sim_cmd->add_option("--profile", sim_profile, "semantics profile");
    sim_cmd->add_option("--timing", sim_timing, "JSON table of per-action execution times");
    sim_cmd->add_option("--seed", sim_seed, "random seed");
    sim_cmd->add_option("--max-steps", sim_max_steps, "step budget");

    // check
    auto* check_cmd =
        app.add_subcommand("check", "Check that the right state graph simulates the left");
    std::string left_path, right_path;
    bool hide_internal = false;
    check_cmd->add_option("left", left_path, "state graph JSON (the implementation)")->required();
    check_cmd->add_option("right", right_path, "state graph JSON (the specification)")->required();
    check_cmd->add_flag("--hide-tau,--weak", hide_internal,
                        "match up to internal steps (tau, tick, exeTime)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (validate_cmd->parsed()) {
            asos::Model m = asos::load_model_file(validate_path);
            asos::ValidationReport report = asos::validate(m);
            if (!report.ok()) {
                std::cerr << report.to_string();
                return 1;
            }
            std::cout << "ok\n";
            return 0;
        }
        if (explore_cmd->parsed()) return run_explore(ex);
        if (sim_cmd->parsed()) {
            asos::Model m = load_checked_model(sim_path);
            std::map<std::string, int> timing;
            if (!sim_timing.empty()) timing = asos::load_timing_file(sim_timing);
            asos::SemanticsProfile profile = asos::parse_profile_spec(sim_profile, timing);
            if (profile.exec_time) check_timing_coverage(m, profile.timing);
            asos::Trace t = asos::random_trace(m, profile, sim_seed, sim_max_steps);
            for (const auto& step : t.steps)
                std::cout << step.label << " " << step.fingerprint << "\n";
            std::cout << "terminal: " << t.terminal << "\n";
            return 0;
        }
        if (check_cmd->parsed()) {
            asos::KripkeStructure left = load_kripke(left_path);
            asos::KripkeStructure right = load_kripke(right_path);
            asos::SimulationOptions opt;
            opt.mode = hide_internal ? asos::MatchMode::Weak : asos::MatchMode::Strong;
            asos::SimulationResult res = asos::check_simulation(left, right, opt);
            if (res.alphabet_error) {
                std::cerr << "error: " << res.message << "\n";
                return 2;
            }
            if (res.holds) {
                std::cout << "simulation holds\n";
                return 0;
            }
            std::cout << "simulation fails";
            if (!res.message.empty()) std::cout << ": " << res.message;
            std::cout << "\n";
            if (!res.counterexample.empty()) {
                std::cout << "counterexample:";
                for (const auto& l : res.counterexample) std::cout << " " << l;
                std::cout << "\n";
            }
            return 1;
        }
    } catch (const asos::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
