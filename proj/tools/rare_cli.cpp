// rare: corpus -> benchmark -> robustness report pipeline driver.
//
// Exit codes: 0 success, 2 configuration error, 3 missing upstream artifact.

#include <CLI11.hpp>
#include <iostream>

#include "rare/rare.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    bool mock = false;
    bool force = false;
    int64_t seed = -1;
};

rare::pipeline::Pipeline make_pipeline(const CommonArgs& args) {
    auto cfg = rare::config::load_config(args.config_path);
    cfg.mock = cfg.mock || args.mock;
    if (args.seed >= 0) cfg.perturb_seed = static_cast<uint64_t>(args.seed);
    cfg.validate();
    return rare::pipeline::Pipeline(std::move(cfg));
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "TOML pipeline config")->required();
    cmd->add_flag("--mock", args.mock, "use fixture-backed mock providers (no network)");
    cmd->add_flag("--force", args.force, "rerun even if the manifest says up to date");
    cmd->add_option("--seed", args.seed, "override the perturbation seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RAG robustness benchmark pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rare::kVersion);

    CommonArgs args;
    struct Cmd {
        const char* name;
        const char* help;
        std::function<void(rare::pipeline::Pipeline&, bool)> run;
    };
    const std::vector<Cmd> cmds = {
        {"ingest", "chunk the corpus into retrieval passages",
         [](rare::pipeline::Pipeline& p, bool f) { p.cmd_ingest(f); }},
        {"extract-kg", "extract and normalize knowledge-graph triplets",
         [](rare::pipeline::Pipeline& p, bool f) { p.cmd_extract_kg(f); }},
        {"patterns", "enumerate single/multi-hop graph patterns",
         [](rare::pipeline::Pipeline& p, bool f) { p.cmd_patterns(f); }},
        {"genqa", "generate and quality-gate QA pairs",
         [](rare::pipeline::Pipeline& p, bool f) { p.cmd_genqa(f); }},
        {"perturb", "produce query and document perturbations",
         [](rare::pipeline::Pipeline& p, bool f) { p.cmd_perturb(f); }},
        {"index", "build embedding indexes and retrieval sets",
         [](rare::pipeline::Pipeline& p, bool f) { p.cmd_index(f); }},
        {"evaluate", "run generators over the perturbation grid and judge",
         [](rare::pipeline::Pipeline& p, bool f) { p.cmd_evaluate(f); }},
        {"report", "aggregate robustness scores",
         [](rare::pipeline::Pipeline& p, bool f) {
             std::cout << p.cmd_report(f) << std::endl;
         }},
        {"run", "run every stage in order",
         [](rare::pipeline::Pipeline& p, bool f) {
             p.run_all(f);
             std::cout << rare::jsonl::read_text(p.report_md_path()) << std::endl;
         }},
    };

    std::map<std::string, const Cmd*> chosen;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        add_common(sub, args);
        chosen[c.name] = &c;
    }

    CLI11_PARSE(app, argc, argv);

    const Cmd* cmd = nullptr;
    for (const auto* sub : app.get_subcommands()) {
        cmd = chosen[sub->get_name()];
    }
    if (!cmd) return 2;

    try {
        auto pipeline = make_pipeline(args);
        cmd->run(pipeline, args.force);
    } catch (const rare::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const rare::MissingArtifact& e) {
        std::cerr << "missing artifact: " << e.what() << "\n"
                  << "run the '" << e.stage << "' stage first\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
