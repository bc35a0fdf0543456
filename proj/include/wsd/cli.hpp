#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wsd/corpus.hpp"
#include "wsd/errors.hpp"
#include "wsd/evaluation.hpp"
#include "wsd/fewshot_kb.hpp"
#include "wsd/lexstore.hpp"
#include "wsd/reporting.hpp"
#include "wsd/runner.hpp"

namespace wsd {
namespace cli {

/// Exit codes: 2 = configuration problem, 3 = bad or missing data,
/// 4 = transport or budget failure, 1 = anything else.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 2;
    if (dynamic_cast<const TransportError*>(&e) != nullptr ||
        dynamic_cast<const BudgetExhaustedError*>(&e) != nullptr) {
        return 4;
    }
    if (dynamic_cast<const SchemaError*>(&e) != nullptr ||
        dynamic_cast<const ValidationError*>(&e) != nullptr ||
        dynamic_cast<const NotFoundError*>(&e) != nullptr) {
        return 3;
    }
    return 1;
}

inline int cmd_kb_build(const std::filesystem::path& corpus_path,
                        const std::filesystem::path& out_path, std::ostream& out,
                        std::ostream& err) {
    // Any failure here exits 1: kb build has no config/data/transport split.
    try {
        std::vector<std::string> warnings;
        const std::vector<WsdInstance> corpus = load_corpus(corpus_path, &warnings);
        for (const std::string& warning : warnings) {
            err << "warning: " << warning << "\n";
        }
        if (corpus.empty()) {
            err << "warning: corpus has no instances; writing an empty knowledge base\n";
        }
        const FewShotKb kb = FewShotKb::build(corpus);
        kb.save(out_path);

        // Per-language, per-lemma example counts, sorted for stable output.
        std::map<std::string, std::map<std::string, std::size_t>> counts;
        std::size_t total = 0;
        for (const auto& [language, lemmas] : kb.tree()) {
            for (const auto& [lemma, pos_map] : lemmas) {
                for (const auto& [pos, senses] : pos_map) {
                    for (const auto& [sense, examples] : senses) {
                        counts[language][lemma + " (" + pos + ")"] += examples.size();
                        total += examples.size();
                    }
                }
            }
        }
        for (const auto& [language, lemmas] : counts) {
            std::size_t language_total = 0;
            for (const auto& [lemma, count] : lemmas) language_total += count;
            out << language << ": " << lemmas.size() << " lemma entries, "
                << language_total << " examples\n";
            for (const auto& [lemma, count] : lemmas) {
                out << "  " << lemma << ": " << count << " examples\n";
            }
        }
        out << "knowledge base with " << total << " examples written to "
            << out_path.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_run(const std::filesystem::path& config_path,
                   const std::vector<std::string>& strategy_override,
                   const std::optional<std::uint64_t>& seed_override, std::ostream& out,
                   std::ostream& err) {
    try {
        RunConfig config = RunConfig::load(config_path);
        if (!strategy_override.empty()) {
            config.strategies.clear();
            for (const std::string& name : strategy_override) {
                config.strategies.push_back(parse_strategy(name));
            }
        }
        if (seed_override) config.seed = *seed_override;

        const RunResult result = run_experiment(config);
        for (const std::string& warning : result.manifest.warnings) {
            err << "warning: " << warning << "\n";
        }
        out << result.records.size() << " predictions ("
            << result.manifest.parse_failure_count << " parse failures) written to "
            << result.predictions_path.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

inline int cmd_score(const std::filesystem::path& predictions_path,
                     const std::filesystem::path& out_dir, std::ostream& out,
                     std::ostream& err) {
    try {
        const std::vector<PredictionRecord> records = load_predictions(predictions_path);
        if (records.empty()) {
            throw ValidationError("predictions file has no records: " +
                                  predictions_path.string());
        }
        const ComparisonMatrix matrix = ComparisonMatrix::build(score_by_group(records));
        std::filesystem::create_directories(out_dir);
        write_report_json(matrix, out_dir / "report.json");
        write_report_csv(matrix, out_dir / "report.csv");
        write_report_md(matrix, out_dir / "report.md");

        for (const std::string& model : matrix.models()) {
            for (const SamplingStrategy strategy : matrix.strategies()) {
                for (const LanguageCode& language : matrix.languages()) {
                    const MatrixCell* cell = matrix.find(model, strategy, language);
                    if (cell == nullptr) continue;
                    out << model << " / " << to_string(strategy) << " / "
                        << language.str() << ": micro-F1 "
                        << detail::format_f1(cell->score.micro_f1) << " ("
                        << cell->score.n_correct << "/" << cell->score.n_instances
                        << (cell->best ? ", best)" : ")") << "\n";
                }
            }
        }
        out << "reports written to " << out_dir.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

inline int cmd_report(const std::filesystem::path& corpus_path,
                      const std::filesystem::path& fixtures_dir,
                      const std::filesystem::path& out_dir, std::ostream& out,
                      std::ostream& err) {
    try {
        std::vector<std::string> warnings;
        const std::vector<WsdInstance> corpus = load_corpus(corpus_path, &warnings);
        for (const std::string& warning : warnings) {
            err << "warning: " << warning << "\n";
        }
        SenseStore store;
        store.preload_fixtures(fixtures_dir);
        const PolysemyHistogram histogram =
            polysemy_histogram(corpus, store.inventories());
        const std::vector<std::filesystem::path> written =
            write_histogram_csv(histogram, out_dir);
        for (const std::filesystem::path& path : written) {
            out << "histogram written to " << path.string() << "\n";
        }
        if (written.empty()) {
            err << "warning: corpus has no instances; nothing to report\n";
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

/// Entry point shared by main() and the tests. `args` excludes the program
/// name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Few-shot word sense disambiguation harness"};
    app.require_subcommand(1);

    CLI::App* kb = app.add_subcommand("kb", "Knowledge-base utilities");
    kb->require_subcommand(1);
    CLI::App* kb_build =
        kb->add_subcommand("build", "Build a few-shot knowledge base from a labeled corpus");
    std::string kb_corpus;
    std::string kb_out;
    kb_build->add_option("-c,--corpus", kb_corpus, "Training corpus JSONL")->required();
    kb_build->add_option("-o,--out", kb_out, "Output knowledge-base JSON path")
        ->required();

    CLI::App* run_cmd = app.add_subcommand("run", "Run the disambiguation experiment");
    std::string run_config;
    std::vector<std::string> run_strategies;
    std::optional<std::uint64_t> run_seed;
    run_cmd->add_option("-c,--config", run_config, "Experiment config JSON")->required();
    run_cmd->add_option("--strategy", run_strategies,
                        "Override strategies (highest|lowest|average, repeatable)");
    run_cmd->add_option("--seed", run_seed, "Override the config seed");

    CLI::App* score_cmd =
        app.add_subcommand("score", "Score a predictions file and write reports");
    std::string score_predictions;
    std::string score_out;
    score_cmd->add_option("-p,--predictions", score_predictions, "Predictions JSONL")
        ->required();
    score_cmd->add_option("-o,--out", score_out, "Output directory")->required();

    CLI::App* report_cmd =
        app.add_subcommand("report", "Write per-language polysemy histograms");
    std::string report_corpus;
    std::string report_fixtures;
    std::string report_out;
    report_cmd->add_option("-c,--corpus", report_corpus, "Corpus JSONL")->required();
    report_cmd->add_option("-f,--fixtures", report_fixtures, "Inventory fixture directory")
        ->required();
    report_cmd->add_option("-o,--out", report_out, "Output directory")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("wsd");
    for (const std::string& arg : args) argv.push_back(arg.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    if (kb_build->parsed()) return cmd_kb_build(kb_corpus, kb_out, out, err);
    if (run_cmd->parsed()) {
        return cmd_run(run_config, run_strategies, run_seed, out, err);
    }
    if (score_cmd->parsed()) return cmd_score(score_predictions, score_out, out, err);
    if (report_cmd->parsed()) {
        return cmd_report(report_corpus, report_fixtures, report_out, out, err);
    }
    err << "error: no command given\n";
    return 2;
}

} // namespace cli
} // namespace wsd
